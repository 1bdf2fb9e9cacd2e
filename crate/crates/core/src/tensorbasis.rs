//! Tensor-product bases `φ_ν(y) = Π_k φ_{ν_k}(y_k)` over an index set.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::indexset::IndexSet;
use crate::linalg::Mat;
use crate::polybasis::{check_unit, fill_family, PolyFamily};
use crate::prolate::ProlateBasis1D;
use crate::scalar::Real;

/// One-dimensional family used in every coordinate.
#[derive(Clone, Debug)]
pub enum Family1D<T> {
    Slepian(Arc<ProlateBasis1D<T>>),
    Legendre,
    Chebyshev,
}

/// Serializable description of a basis (no coefficients).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub family: String,
    pub w: Option<f64>,
    pub d: usize,
    pub n: usize,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct TensorBasis<T> {
    family: Family1D<T>,
    index_set: IndexSet,
}

/// Location and value of the grid maximum of `Σ_ν |φ_ν|²`.
#[derive(Clone, Debug)]
pub struct ChristoffelEstimate<T> {
    pub value: T,
    pub argmax: Vec<T>,
}

impl<T: Real> TensorBasis<T> {
    pub fn new(family: Family1D<T>, index_set: IndexSet) -> Result<Self> {
        if let Family1D::Slepian(b) = &family {
            let need = index_set.max_component();
            if need > b.jmax() {
                return Err(Error::IndexOutOfRange { index: need, max: b.jmax() });
            }
        }
        Ok(TensorBasis { family, index_set })
    }

    /// Slepian basis on the hyperbolic cross of order `n`, building the
    /// one-dimensional functions up to index `n − 1`.
    pub fn slepian_cross(w: T, d: usize, n: usize) -> Result<Self> {
        let set = IndexSet::hyperbolic_cross(d, n)?;
        let b = ProlateBasis1D::new(w, set.max_component())?;
        Self::new(Family1D::Slepian(Arc::new(b)), set)
    }

    pub fn polynomial_cross(family: PolyFamily, d: usize, n: usize) -> Result<Self> {
        let set = IndexSet::hyperbolic_cross(d, n)?;
        let fam = match family {
            PolyFamily::LegendreNormalized => Family1D::Legendre,
            PolyFamily::ChebyshevFirstKind => Family1D::Chebyshev,
        };
        Self::new(fam, set)
    }

    pub fn family(&self) -> &Family1D<T> {
        &self.family
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn d(&self) -> usize {
        self.index_set.d()
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    /// Basis functions are orthonormal in L²_u.
    pub fn is_orthonormal(&self) -> bool {
        !matches!(self.family, Family1D::Chebyshev)
    }

    pub fn descriptor(&self) -> BasisDescriptor {
        let (family, w) = match &self.family {
            Family1D::Slepian(b) => ("slepian", Some(b.w().to_f64_lossy())),
            Family1D::Legendre => ("legendre", None),
            Family1D::Chebyshev => ("chebyshev", None),
        };
        BasisDescriptor {
            family: family.into(),
            w,
            d: self.d(),
            n: self.index_set.n(),
            size: self.len(),
        }
    }

    /// One-dimensional values `0..=max_component` at a coordinate.
    fn sweep(&self, x: T, out: &mut [T]) {
        match &self.family {
            Family1D::Slepian(b) => {
                b.evaluate_all(x, out).expect("index range validated at construction");
            }
            Family1D::Legendre => fill_family(PolyFamily::LegendreNormalized, x, out),
            Family1D::Chebyshev => fill_family(PolyFamily::ChebyshevFirstKind, x, out),
        }
    }

    /// Row `(φ_ν(y))_{ν∈Λ}` in index-set order.
    pub fn eval_basis_row(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: y.len() });
        }
        for &c in y {
            check_unit(c)?;
        }
        let mut out = vec![T::zero(); self.len()];
        self.fill_row(y, &mut out);
        Ok(out)
    }

    pub(crate) fn fill_row(&self, y: &[T], out: &mut [T]) {
        let width = self.index_set.max_component() + 1;
        let d = self.d();
        let mut table = vec![T::zero(); d * width];
        for (k, &c) in y.iter().enumerate() {
            self.sweep(c, &mut table[k * width..(k + 1) * width]);
        }
        for (o, nu) in out.iter_mut().zip(self.index_set.iter()) {
            *o = nu
                .iter()
                .enumerate()
                .fold(T::one(), |acc, (k, &j)| acc * table[k * width + j]);
        }
    }

    /// Matrix whose row `i` is `eval_basis_row(points[i])`; rows in parallel.
    pub fn eval_rows(&self, points: &[T]) -> Result<Mat<T>> {
        let d = self.d();
        if !points.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, got: points.len() % d });
        }
        for &c in points {
            check_unit(c)?;
        }
        let m = points.len() / d;
        let n = self.len();
        let mut out = Mat::zeros(m, n);
        out.as_mut_slice()
            .par_chunks_mut(n.max(1))
            .zip(points.par_chunks(d))
            .for_each(|(row, y)| self.fill_row(y, row));
        Ok(out)
    }

    /// Grid maximum of `Σ_ν |φ_ν(y)|²` over a tensor grid of
    /// Chebyshev–Lobatto nodes (endpoints included). Grids with
    /// `2^k + 1` nodes are nested, so refining them never lowers the value.
    pub fn christoffel_sup(&self, grid_per_dim: usize) -> Result<ChristoffelEstimate<T>> {
        if grid_per_dim < 33 {
            return invalid(format!("grid_per_dim must be at least 33, got {grid_per_dim}"));
        }
        let d = self.d();
        let g = if d >= 3 { grid_per_dim.min(65) } else { grid_per_dim };
        let nodes = chebyshev_lobatto::<T>(g);
        let total = g.pow(d as u32);
        let best = (0..total)
            .into_par_iter()
            .map(|flat| {
                let y = grid_point(&nodes, d, flat);
                let mut row = vec![T::zero(); self.len()];
                self.fill_row(&y, &mut row);
                let v: T = row.iter().map(|&r| r * r).sum();
                (v, flat)
            })
            .reduce(
                || (T::neg_infinity(), usize::MAX),
                |a, b| {
                    if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                        a
                    } else {
                        b
                    }
                },
            );
        Ok(ChristoffelEstimate { value: best.0, argmax: grid_point(&nodes, d, best.1) })
    }
}

/// `cos(π i/(g−1))` for `i = 0..g`, sorted ascending, with exact ±1 and 0.
pub fn chebyshev_lobatto<T: Real>(g: usize) -> Vec<T> {
    if g == 1 {
        return vec![T::zero()];
    }
    let mut v: Vec<T> = (0..g)
        .map(|i| {
            let k = g - 1 - i;
            if 2 * k == g - 1 {
                T::zero()
            } else {
                T::lit((std::f64::consts::PI * k as f64 / (g - 1) as f64).cos())
            }
        })
        .collect();
    v[0] = -T::one();
    v[g - 1] = T::one();
    v
}

/// Point number `flat` of the tensor grid, lexicographic with the first
/// coordinate slowest.
pub fn grid_point<T: Real>(nodes: &[T], d: usize, mut flat: usize) -> Vec<T> {
    let g = nodes.len();
    let mut y = vec![T::zero(); d];
    for k in (0..d).rev() {
        y[k] = nodes[flat % g];
        flat /= g;
    }
    y
}
