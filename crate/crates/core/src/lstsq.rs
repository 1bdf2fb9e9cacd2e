//! Least-squares fitting over a tensor basis from random samples.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Mat, QrSvd};
use crate::quadrature::GaussLegendre;
use crate::sampling::{rmse, SampleSet, TargetFunction};
use crate::scalar::Real;
use crate::tensorbasis::{chebyshev_lobatto, grid_point, BasisDescriptor, TensorBasis};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FitResult<T> {
    #[serde(with = "complex_list")]
    pub coefficients: Vec<Complex<T>>,
    pub sigma_min: T,
    pub sigma_max: T,
    /// Discrete stability constant, equal to `sigma_min`.
    pub alpha: T,
    pub residual_norm: T,
    pub rmse_train: T,
    pub rmse_test: Option<T>,
    pub basis: BasisDescriptor,
    pub m: usize,
    pub seed: u64,
}

impl<T: Real> FitResult<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Serializes complex vectors as `[{"re": .., "im": ..}, ..]`.
pub mod complex_list {
    use num_complex::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct ReIm<T> {
        re: T,
        im: T,
    }

    pub fn serialize<S: Serializer, T: Serialize + Copy>(v: &[Complex<T>], s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<ReIm<T>> = v.iter().map(|z| ReIm { re: z.re, im: z.im }).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Vec<Complex<T>>, D::Error> {
        let list: Vec<ReIm<T>> = Vec::deserialize(d)?;
        Ok(list.into_iter().map(|z| Complex::new(z.re, z.im)).collect())
    }
}

/// `A_{j,ν} = φ_ν(y_j)/√m`.
pub fn design_matrix<T: Real>(basis: &TensorBasis<T>, samples: &SampleSet<T>) -> Result<Mat<T>> {
    if basis.d() != samples.d {
        return Err(Error::DimensionMismatch { expected: basis.d(), got: samples.d });
    }
    if samples.m() == 0 {
        return invalid("empty sample set");
    }
    let mut a = basis.eval_rows(&samples.points)?;
    let s = T::one() / T::from_usize_lossy(samples.m()).sqrt();
    a.as_mut_slice().par_iter_mut().for_each(|v| *v *= s);
    Ok(a)
}

fn degenerate_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::lit(32.0) * T::epsilon())
}

/// Factorized least-squares operator that refuses rank-deficient matrices.
#[derive(Clone, Debug)]
pub struct LeastSquares<T> {
    factor: QrSvd<T>,
    m: usize,
    n: usize,
}

impl<T: Real> LeastSquares<T> {
    pub fn new(a: &Mat<T>) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(Error::Underdetermined { m, n });
        }
        let factor = QrSvd::new(a)?;
        let (smin, smax) = (factor.sigma_min(), factor.sigma_max());
        if !(smin > degenerate_tolerance::<T>() * smax) {
            return Err(Error::DegenerateFit { sigma_min: smin.to_f64_lossy(), sigma_max: smax.to_f64_lossy() });
        }
        Ok(LeastSquares { factor, m, n })
    }

    pub fn sigma_min(&self) -> T {
        self.factor.sigma_min()
    }

    pub fn sigma_max(&self) -> T {
        self.factor.sigma_max()
    }

    pub fn singular_values(&self) -> &[T] {
        self.factor.singular_values()
    }

    pub fn solve_real(&self, b: &[T]) -> Result<Vec<T>> {
        self.factor.solve(b)
    }

    /// Real and imaginary parts solved separately with the same factors.
    pub fn solve_complex(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if b.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: b.len() });
        }
        let re: Vec<T> = b.iter().map(|z| z.re).collect();
        let im: Vec<T> = b.iter().map(|z| z.im).collect();
        let xr = self.factor.solve(&re)?;
        let xi = if im.iter().all(|&v| v == T::zero()) {
            vec![T::zero(); self.n]
        } else {
            self.factor.solve(&im)?
        };
        Ok(xr.into_iter().zip(xi).map(|(r, i)| Complex::new(r, i)).collect())
    }
}

pub(crate) fn complex_matvec<T: Real>(a: &Mat<T>, c: &[Complex<T>]) -> Vec<Complex<T>> {
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(c)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (&x, z)| acc + z * x)
        })
        .collect()
}

/// Solves the least-squares problem for an already assembled, scaled
/// design matrix and returns coefficients plus diagnostics.
pub fn fit_matrix<T: Real>(
    a: &Mat<T>,
    samples: &SampleSet<T>,
    basis: BasisDescriptor,
) -> Result<FitResult<T>> {
    let m = samples.m();
    if a.rows() != m {
        return Err(Error::DimensionMismatch { expected: m, got: a.rows() });
    }
    let ls = LeastSquares::new(a)?;
    let sm = T::from_usize_lossy(m).sqrt();
    let b: Vec<Complex<T>> = samples.values.iter().map(|v| v / sm).collect();
    let coefficients = ls.solve_complex(&b)?;
    let ac = complex_matvec(a, &coefficients);
    let residual_norm = ac
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<T>()
        .sqrt();
    let pred: Vec<Complex<T>> = ac.iter().map(|z| z * sm).collect();
    let rmse_train = rmse(&samples.values, &pred)?;
    Ok(FitResult {
        coefficients,
        sigma_min: ls.sigma_min(),
        sigma_max: ls.sigma_max(),
        alpha: ls.sigma_min(),
        residual_norm,
        rmse_train,
        rmse_test: None,
        basis,
        m,
        seed: samples.seed,
    })
}

/// Least-squares fit `f♮` of the samples in the span of `basis`.
pub fn fit<T: Real>(basis: &TensorBasis<T>, samples: &SampleSet<T>) -> Result<FitResult<T>> {
    if samples.m() < basis.len() {
        return Err(Error::Underdetermined { m: samples.m(), n: basis.len() });
    }
    let a = design_matrix(basis, samples)?;
    fit_matrix(&a, samples, basis.descriptor())
}

/// [`fit`] followed by evaluation on an independent test set.
pub fn fit_with_test<T: Real>(
    basis: &TensorBasis<T>,
    train: &SampleSet<T>,
    test: &SampleSet<T>,
) -> Result<FitResult<T>> {
    let mut r = fit(basis, train)?;
    let pred = predict(basis, &r.coefficients, &test.points)?;
    r.rmse_test = Some(rmse(&test.values, &pred)?);
    Ok(r)
}

/// `Σ_ν c_ν φ_ν(y)` at each point.
pub fn predict<T: Real>(basis: &TensorBasis<T>, coeffs: &[Complex<T>], points: &[T]) -> Result<Vec<Complex<T>>> {
    if coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: coeffs.len() });
    }
    let rows = basis.eval_rows(points)?;
    Ok(complex_matvec(&rows, coeffs))
}

/// `τ_L(c) = min{1, L/‖c‖₂}·c`.
pub fn truncate_tau_l<T: Real>(coeffs: &[Complex<T>], l_bound: T) -> Result<Vec<Complex<T>>> {
    if !(l_bound > T::zero()) {
        return invalid("truncation bound must be positive");
    }
    let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let s = if norm > l_bound { l_bound / norm } else { T::one() };
    Ok(coeffs.iter().map(|z| z * s).collect())
}

/// Result of checking `‖f − f♮‖_{L²_u} ≤ (1 + 1/α)·E∞ + ‖e‖₂/α`.
#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct ErrorBoundReport<T> {
    pub lhs: T,
    pub e_inf: T,
    pub alpha: T,
    pub noise_norm: T,
    pub rhs: T,
    pub holds: bool,
}

fn quadrature_nodes_per_dim(d: usize) -> usize {
    match d {
        1 => 256,
        2 => 96,
        _ => 32,
    }
}

fn sup_grid_per_dim(d: usize) -> usize {
    match d {
        1 => 2049,
        2 => 257,
        _ => 65,
    }
}

/// Tensor Gauss–Legendre nodes and weights for the uniform probability measure.
fn tensor_quadrature<T: Real>(d: usize, n: usize) -> (Vec<T>, Vec<T>) {
    let q = GaussLegendre::<T>::new(n);
    let total = n.pow(d as u32);
    let half = T::lit(0.5);
    let mut pts = Vec::with_capacity(total * d);
    let mut wts = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut w = T::one();
        let mut p = vec![T::zero(); d];
        for k in (0..d).rev() {
            let i = rest % n;
            rest /= n;
            p[k] = q.nodes[i];
            w *= q.weights[i] * half;
        }
        pts.extend(p);
        wts.push(w);
    }
    (pts, wts)
}

/// Best approximation proxy: weighted least squares on a tensor
/// Gauss–Legendre rule, i.e. the L²_u projection for orthonormal bases.
pub fn projection_proxy<T: Real>(basis: &TensorBasis<T>, f: &TargetFunction<T>) -> Result<Vec<Complex<T>>> {
    let d = basis.d();
    let (pts, wts) = tensor_quadrature::<T>(d, quadrature_nodes_per_dim(d));
    let mut a = basis.eval_rows(&pts)?;
    let vals = f.evaluate_points(&pts)?;
    let sw: Vec<T> = wts.iter().map(|w| w.sqrt()).collect();
    for (i, &s) in sw.iter().enumerate() {
        for v in a.row_mut(i) {
            *v *= s;
        }
    }
    let b: Vec<Complex<T>> = vals.iter().zip(&sw).map(|(v, &s)| v * s).collect();
    LeastSquares::new(&a)?.solve_complex(&b)
}

/// Checks the deterministic recovery inequality for a completed fit.
///
/// `E∞` is the maximum of `|f − g|` over the Chebyshev–Lobatto grid and the
/// sample points, for the proxy `g` (default: [`projection_proxy`]). When
/// `in_span` is set and the basis is orthonormal, the left side is the
/// coefficient distance to the proxy; otherwise it is computed by tensor
/// Gauss–Legendre quadrature.
pub fn verify_error_bound<T: Real>(
    fit: &FitResult<T>,
    basis: &TensorBasis<T>,
    f: &TargetFunction<T>,
    samples: &SampleSet<T>,
    proxy: Option<&[Complex<T>]>,
    in_span: bool,
) -> Result<ErrorBoundReport<T>> {
    let alpha = fit.alpha;
    if !(alpha > T::zero()) {
        return invalid("stability constant is zero");
    }
    let d = basis.d();
    let g = match proxy {
        Some(p) => p.to_vec(),
        None => projection_proxy(basis, f)?,
    };
    let nodes = chebyshev_lobatto::<T>(sup_grid_per_dim(d));
    let total = nodes.len().pow(d as u32);
    let grid: Vec<T> = (0..total).flat_map(|i| grid_point(&nodes, d, i)).collect();
    let sup_on = |pts: &[T]| -> Result<T> {
        let fv = f.evaluate_points(pts)?;
        let gv = predict(basis, &g, pts)?;
        Ok(fv.iter().zip(&gv).fold(T::zero(), |m, (a, b)| m.max((a - b).norm())))
    };
    let e_inf = sup_on(&grid)?.max(sup_on(&samples.points)?);
    let lhs = if in_span && basis.is_orthonormal() {
        g.iter()
            .zip(&fit.coefficients)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<T>()
            .sqrt()
    } else {
        let (pts, wts) = tensor_quadrature::<T>(d, quadrature_nodes_per_dim(d));
        let fv = f.evaluate_points(&pts)?;
        let pv = predict(basis, &fit.coefficients, &pts)?;
        fv.iter()
            .zip(&pv)
            .zip(&wts)
            .map(|((a, b), &w)| w * (a - b).norm_sqr())
            .sum::<T>()
            .sqrt()
    };
    let noise_norm = samples.noise_norm();
    let rhs = (T::one() + T::one() / alpha) * e_inf + noise_norm / alpha;
    Ok(ErrorBoundReport { lhs, e_inf, alpha, noise_norm, rhs, holds: lhs <= rhs })
}
