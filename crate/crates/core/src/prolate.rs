//! One-dimensional Slepian functions (prolate spheroidal wave functions).
//!
//! `φ_{w,j}` are the eigenfunctions of the sinc-kernel operator
//! `Q_w f(x) = ∫₋₁¹ f(t)·sin(w(x−t))/(π(x−t)) dt` on [-1, 1]. They are
//! computed as eigenvectors of the commuting Sturm–Liouville operator
//! `L_w u = −((1−x²)u')' + w²x²u`, expanded in L²_u-normalized Legendre
//! polynomials. Even and odd coefficients decouple, so each parity is a
//! symmetric tridiagonal eigenproblem.

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, tridiagonal_eigen, tridiagonal_shifted_solve};
use crate::polybasis::{check_unit, fill_legendre, legendre_recurrence_coeff};
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

const MAX_DOUBLINGS: usize = 6;
const TAIL_LEN: usize = 10;

#[derive(Clone, Debug)]
pub struct ProlateBasis1D<T> {
    w: T,
    jmax: usize,
    ntrunc: usize,
    coeffs: Vec<Vec<T>>,
    chi: Vec<T>,
    mu: Vec<T>,
    ln_mu: Vec<T>,
    residuals: Vec<T>,
    ordering_violations: Vec<usize>,
}

/// Entry `⟨L_w P_i, P_k⟩_u` of the Galerkin matrix.
///
/// The `x²` part comes from applying the multiplication-by-x recurrence
/// twice, so the truncated matrix is the exact projection of `L_w`.
pub fn galerkin_entry<T: Real>(w: T, i: usize, k: usize) -> T {
    let (lo, hi) = if i <= k { (i, k) } else { (k, i) };
    let a = legendre_recurrence_coeff::<T>;
    let w2 = w * w;
    if lo == hi {
        let kk = T::from_usize_lossy(lo);
        kk * (kk + T::one()) + w2 * (a(lo) * a(lo) + a(lo + 1) * a(lo + 1))
    } else if hi == lo + 2 {
        w2 * a(lo + 1) * a(lo + 2)
    } else {
        T::zero()
    }
}

/// Sinc kernel `sin(w(x−t))/(π(x−t))` with its limit `w/π` on the diagonal.
pub fn sinc_kernel<T: Real>(w: T, x: T, t: T) -> T {
    let d = x - t;
    if d == T::zero() {
        w / T::PI()
    } else {
        (w * d).sin() / (T::PI() * d)
    }
}

fn tail_tolerance<T: Real>() -> T {
    T::lit(1e-14).max(T::lit(10.0) * T::epsilon())
}

fn residual_tolerance<T: Real>(chi: T) -> T {
    T::lit(1e-10).max(T::lit(64.0) * T::epsilon() * chi.abs().max(T::one()))
}

struct Block<T> {
    parity: usize,
    diag: Vec<T>,
    off: Vec<T>,
}

impl<T: Real> Block<T> {
    fn new(w: T, parity: usize, ntrunc: usize) -> Self {
        let idx: Vec<usize> = (parity..=ntrunc).step_by(2).collect();
        let diag = idx.iter().map(|&k| galerkin_entry(w, k, k)).collect();
        let off = idx.windows(2).map(|p| galerkin_entry(w, p[0], p[1])).collect();
        Block { parity, diag, off }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, y: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * y[i];
                if i > 0 {
                    s += self.off[i - 1] * y[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * y[i + 1];
                }
                s
            })
            .collect()
    }

    fn rayleigh(&self, y: &[T]) -> T {
        let ty = self.apply(y);
        let num: T = ty.iter().zip(y).map(|(&a, &b)| a * b).sum();
        let den: T = y.iter().map(|&a| a * a).sum();
        num / den
    }

    fn residual(&self, y: &[T], chi: T) -> T {
        let ty = self.apply(y);
        let r: Vec<T> = ty.iter().zip(y).map(|(&a, &b)| a - chi * b).collect();
        norm2(&r) / norm2(y)
    }

    /// Replaces the decaying tail of `y` by the minimal solution of the
    /// three-term recurrence, computed by backward ratios. This keeps tiny
    /// coefficients relatively accurate instead of sitting at the noise floor.
    fn refine_tail(&self, y: &mut [T], chi: T) {
        let n = self.len();
        if n < 3 {
            return;
        }
        let two = T::lit(2.0);
        let coupling = |q: usize| {
            let left = if q > 0 { self.off[q - 1].abs() } else { T::zero() };
            let right = if q + 1 < n { self.off[q].abs() } else { T::zero() };
            left + right
        };
        let argmax = y
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
            .0;
        let mut start = None;
        for q in (argmax + 1..n).rev() {
            if self.diag[q] - chi > two * coupling(q) {
                start = Some(q);
            } else {
                break;
            }
        }
        let Some(p) = start else { return };
        // ratios r[i] = y[i+1]/y[i] for i in p..n-1, with y[n] = 0.
        let mut r = vec![T::zero(); n];
        for i in (p..n - 1).rev() {
            let next = if i + 2 < n { self.off[i + 1] * r[i + 1] } else { T::zero() };
            r[i] = -self.off[i] / (self.diag[i + 1] - chi + next);
        }
        for i in p..n - 1 {
            y[i + 1] = r[i] * y[i];
        }
    }
}

struct Eigenpair<T> {
    chi: T,
    vec: Vec<T>,
    residual: T,
}

fn solve_block<T: Real>(block: &Block<T>, count: usize) -> Result<Vec<Eigenpair<T>>> {
    let (vals, vecs) = tridiagonal_eigen(&block.diag, &block.off)?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count.min(block.len()) {
        let mut chi = vals[i];
        let mut y = vecs.column(i);
        for _ in 0..2 {
            let z = tridiagonal_shifted_solve(&block.diag, &block.off, chi, &y);
            let nz = norm2(&z);
            if !nz.is_finite() || nz == T::zero() {
                break;
            }
            y = z.into_iter().map(|v| v / nz).collect();
            chi = block.rayleigh(&y);
        }
        block.refine_tail(&mut y, chi);
        let ny = norm2(&y);
        for v in y.iter_mut() {
            *v /= ny;
        }
        chi = block.rayleigh(&y);
        let residual = block.residual(&y, chi);
        out.push(Eigenpair { chi, vec: y, residual });
    }
    Ok(out)
}

impl<T: Real> ProlateBasis1D<T> {
    /// Builds `φ_{w,0..=jmax}`, doubling the truncation order until the
    /// trailing Legendre coefficients are negligible.
    pub fn new(w: T, jmax: usize) -> Result<Self> {
        if !(w > T::zero()) || !w.is_finite() {
            return invalid(format!("bandwidth must be positive and finite, got {w}"));
        }
        let mut ntrunc = 2 * jmax + (T::lit(2.0) * w).ceil().to_usize().unwrap_or(0) + 40;
        for _ in 0..=MAX_DOUBLINGS {
            let basis = Self::with_truncation(w, jmax, ntrunc)?;
            if basis.tail_is_negligible() {
                return Ok(basis);
            }
            ntrunc *= 2;
        }
        Err(Error::TruncationFailed { ntrunc: ntrunc / 2 })
    }

    /// Builds at a fixed truncation order without the tail test.
    pub fn with_truncation(w: T, jmax: usize, ntrunc: usize) -> Result<Self> {
        if !(w > T::zero()) || !w.is_finite() {
            return invalid(format!("bandwidth must be positive and finite, got {w}"));
        }
        if ntrunc < jmax + 1 {
            return invalid(format!("ntrunc {ntrunc} too small for jmax {jmax}"));
        }
        let even = Block::new(w, 0, ntrunc);
        let odd = Block::new(w, 1, ntrunc);
        let n_even = jmax / 2 + 1;
        let n_odd = jmax.div_ceil(2);
        let pairs_even = solve_block(&even, n_even)?;
        let pairs_odd = solve_block(&odd, n_odd)?;

        let mut coeffs = Vec::with_capacity(jmax + 1);
        let mut chi = Vec::with_capacity(jmax + 1);
        let mut residuals = Vec::with_capacity(jmax + 1);
        for j in 0..=jmax {
            let (block, pair) = if j % 2 == 0 {
                (&even, &pairs_even[j / 2])
            } else {
                (&odd, &pairs_odd[j / 2])
            };
            let mut full = vec![T::zero(); ntrunc + 1];
            for (i, &v) in pair.vec.iter().enumerate() {
                full[block.parity + 2 * i] = v;
            }
            fix_sign(&mut full);
            if pair.residual > residual_tolerance(pair.chi) {
                return Err(Error::ResidualTooLarge { index: j, residual: pair.residual.to_f64_lossy() });
            }
            coeffs.push(full);
            chi.push(pair.chi);
            residuals.push(pair.residual);
        }
        let mut basis = ProlateBasis1D {
            w,
            jmax,
            ntrunc,
            coeffs,
            chi,
            mu: Vec::new(),
            ln_mu: Vec::new(),
            residuals,
            ordering_violations: Vec::new(),
        };
        basis.compute_mu();
        basis.ordering_violations = basis.find_ordering_violations();
        Ok(basis)
    }

    fn tail_is_negligible(&self) -> bool {
        let tol = tail_tolerance::<T>();
        self.coeffs.iter().all(|c| {
            c[c.len().saturating_sub(TAIL_LEN)..].iter().all(|v| v.abs() < tol)
        })
    }

    fn find_ordering_violations(&self) -> Vec<usize> {
        let mut bad = Vec::new();
        for j in 1..=self.jmax {
            if !(self.chi[j] > self.chi[j - 1]) || !(self.ln_mu[j] < self.ln_mu[j - 1]) {
                bad.push(j);
            }
        }
        if !(self.chi[0] > T::zero()) {
            bad.insert(0, 0);
        }
        bad
    }

    /// μ₀ from the Rayleigh quotient of the sinc kernel; higher μ_j from the
    /// exact ratio `|λ_j/λ_{j−1}| = w·|⟨xφ_j, φ_{j−1}⟩| / |⟨φ_j', φ_{j−1}⟩|`
    /// of the finite Fourier transform eigenvalues, with `μ = (w/2π)|λ|²`.
    /// The ratio form keeps full relative accuracy far below rounding level.
    fn compute_mu(&mut self) {
        let mu0 = self.mu_rayleigh(0);
        let below_one = T::one() - T::epsilon();
        let mu0 = if mu0 >= T::one() { below_one } else { mu0 };
        let mut ln_mu = Vec::with_capacity(self.jmax + 1);
        ln_mu.push(mu0.ln());
        for j in 1..=self.jmax {
            let t = self.x_moment(j - 1, j);
            let a = self.derivative_moment(j - 1, j);
            let ratio = self.w * t.abs() / a.abs();
            let prev = ln_mu[j - 1];
            ln_mu.push(prev + T::lit(2.0) * ratio.ln());
        }
        self.mu = ln_mu.iter().map(|&l| l.exp()).collect();
        self.ln_mu = ln_mu;
    }

    /// `⟨x φ_k, φ_j⟩_u` in coefficient space.
    fn x_moment(&self, j: usize, k: usize) -> T {
        let bj = &self.coeffs[j];
        let bk = &self.coeffs[k];
        let n = self.ntrunc;
        let mut s = T::zero();
        for i in 0..=n {
            let mut xb = T::zero();
            if i < n {
                xb += legendre_recurrence_coeff::<T>(i + 1) * bk[i + 1];
            }
            if i >= 1 {
                xb += legendre_recurrence_coeff::<T>(i) * bk[i - 1];
            }
            s += bj[i] * xb;
        }
        s
    }

    /// `⟨φ_k', φ_j⟩_u`, using `P_m' = Σ_{i<m, m−i odd} √((2m+1)(2i+1)) P_i`.
    fn derivative_moment(&self, j: usize, k: usize) -> T {
        let bj = &self.coeffs[j];
        let bk = &self.coeffs[k];
        let n = self.ntrunc;
        let two = T::lit(2.0);
        // suffix[m] = Σ_{m' ≥ m, m' ≡ m (mod 2)} √(2m'+1) β_{k,m'}
        let mut suffix = vec![T::zero(); n + 3];
        for m in (0..=n).rev() {
            let sq = (two * T::from_usize_lossy(m) + T::one()).sqrt();
            suffix[m] = sq * bk[m] + suffix[m + 2];
        }
        let mut s = T::zero();
        for i in 0..n {
            let sq = (two * T::from_usize_lossy(i) + T::one()).sqrt();
            s += bj[i] * sq * suffix[i + 1];
        }
        s
    }

    fn quadrature(&self) -> GaussLegendre<T> {
        GaussLegendre::new(self.default_quadrature_order())
    }

    pub fn default_quadrature_order(&self) -> usize {
        512.max(2 * self.ntrunc)
    }

    /// Rayleigh quotient `⟨Q_w φ_j, φ_j⟩ / ⟨φ_j, φ_j⟩` by Gauss–Legendre
    /// quadrature. Accurate to roughly machine precision in absolute terms.
    pub fn mu_rayleigh(&self, j: usize) -> T {
        let q = self.quadrature();
        let phi: Vec<T> = q.nodes.iter().map(|&x| self.eval_unchecked(j, x)).collect();
        let mut num = T::zero();
        let mut den = T::zero();
        for (i, (&xi, &wi)) in q.nodes.iter().zip(&q.weights).enumerate() {
            let mut inner = T::zero();
            for (k, (&tk, &wk)) in q.nodes.iter().zip(&q.weights).enumerate() {
                inner += wk * sinc_kernel(self.w, xi, tk) * phi[k];
            }
            num += wi * phi[i] * inner;
            den += wi * phi[i] * phi[i];
        }
        num / den
    }

    pub fn w(&self) -> T {
        self.w
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn ntrunc(&self) -> usize {
        self.ntrunc
    }

    /// Legendre coefficients `β^j`, length `ntrunc + 1`.
    pub fn coeffs(&self, j: usize) -> Result<&[T]> {
        self.check_index(j)?;
        Ok(&self.coeffs[j])
    }

    pub fn chi(&self) -> &[T] {
        &self.chi
    }

    /// Kernel eigenvalues; entries may underflow to zero, see [`Self::ln_mu`].
    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn ln_mu(&self) -> &[T] {
        &self.ln_mu
    }

    /// Relative Galerkin residuals `‖Mv − χv‖/‖v‖` per index.
    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    /// Indices where χ fails to increase or μ fails to decrease.
    pub fn ordering_violations(&self) -> &[usize] {
        &self.ordering_violations
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j > self.jmax {
            Err(Error::IndexOutOfRange { index: j, max: self.jmax })
        } else {
            Ok(())
        }
    }

    /// `φ_{w,j}(x)`.
    pub fn evaluate(&self, j: usize, x: T) -> Result<T> {
        self.check_index(j)?;
        check_unit(x)?;
        Ok(self.eval_unchecked(j, x))
    }

    pub fn evaluate_many(&self, j: usize, xs: &[T]) -> Result<Vec<T>> {
        self.check_index(j)?;
        let mut p = vec![T::zero(); self.ntrunc + 1];
        xs.iter()
            .map(|&x| {
                check_unit(x)?;
                fill_legendre(x, &mut p);
                Ok(series(&self.coeffs[j], &p))
            })
            .collect()
    }

    /// Writes `φ_{w,0..out.len()}(x)` into `out` using one Legendre sweep.
    pub fn evaluate_all(&self, x: T, out: &mut [T]) -> Result<()> {
        check_unit(x)?;
        if out.len() > self.jmax + 1 {
            return Err(Error::IndexOutOfRange { index: out.len() - 1, max: self.jmax });
        }
        let mut p = vec![T::zero(); self.ntrunc + 1];
        fill_legendre(x, &mut p);
        for (j, o) in out.iter_mut().enumerate() {
            *o = series(&self.coeffs[j], &p);
        }
        Ok(())
    }

    pub(crate) fn eval_unchecked(&self, j: usize, x: T) -> T {
        let mut p = vec![T::zero(); self.ntrunc + 1];
        fill_legendre(x, &mut p);
        series(&self.coeffs[j], &p)
    }

    /// `(Q_w φ_j)(x)` at each grid point by Gauss–Legendre quadrature of the
    /// default order.
    pub fn apply_qw(&self, j: usize, grid: &[T]) -> Result<Vec<T>> {
        self.apply_qw_with_order(j, grid, self.default_quadrature_order())
    }

    pub fn apply_qw_with_order(&self, j: usize, grid: &[T], order: usize) -> Result<Vec<T>> {
        self.check_index(j)?;
        if order < 2 * self.ntrunc {
            return invalid(format!(
                "quadrature order {order} below 2*ntrunc = {}",
                2 * self.ntrunc
            ));
        }
        for &x in grid {
            check_unit(x)?;
        }
        let q = GaussLegendre::<T>::new(order);
        let phi: Vec<T> = q.nodes.iter().map(|&t| self.eval_unchecked(j, t)).collect();
        Ok(grid
            .iter()
            .map(|&x| {
                q.nodes
                    .iter()
                    .zip(&q.weights)
                    .zip(&phi)
                    .fold(T::zero(), |acc, ((&t, &wt), &p)| acc + wt * sinc_kernel(self.w, x, t) * p)
            })
            .collect())
    }
}

fn series<T: Real>(beta: &[T], p: &[T]) -> T {
    beta.iter().zip(p).fold(T::zero(), |acc, (&b, &v)| acc + b * v)
}

/// Largest-magnitude entry made positive; ties go to the lowest index.
fn fix_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_bandwidth() {
        assert!(ProlateBasis1D::<f64>::new(0.0, 3).is_err());
        assert!(ProlateBasis1D::<f64>::new(-1.0, 3).is_err());
        assert!(ProlateBasis1D::<f64>::new(f64::NAN, 3).is_err());
    }

    #[test]
    fn mu_ratio_matches_rayleigh_quotient() {
        let b = ProlateBasis1D::<f64>::new(4.0, 8).unwrap();
        for j in 0..=8 {
            let rq = b.mu_rayleigh(j);
            let mu = b.mu()[j];
            assert!((rq - mu).abs() < 1e-12, "j={j} rq={rq} mu={mu}");
        }
    }

    #[test]
    fn known_values_small_bandwidth() {
        // Classical value λ₀(c=1) of the time-band limiting operator.
        let b = ProlateBasis1D::<f64>::new(1.0, 5).unwrap();
        assert!((b.mu()[0] - 0.572_581_6).abs() < 1e-6);
        assert!(b.ordering_violations().is_empty());
    }

    #[test]
    fn parity_and_sign() {
        let b = ProlateBasis1D::<f64>::new(3.0, 6).unwrap();
        for j in 0..=6 {
            let c = b.coeffs(j).unwrap();
            for (i, &v) in c.iter().enumerate() {
                if (i + j) % 2 == 1 {
                    assert_eq!(v, 0.0);
                }
            }
            let imax = c
                .iter()
                .enumerate()
                .fold(0, |bi, (i, &v)| if v.abs() > c[bi].abs() { i } else { bi });
            assert!(c[imax] > 0.0);
        }
    }
}
