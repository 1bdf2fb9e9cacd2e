//! Orthonormal Legendre and first-kind Chebyshev polynomials on [-1, 1].
//!
//! Legendre polynomials are normalized in L²_u (uniform probability
//! measure), `P_k = √(2k+1)·P̃_k`. Chebyshev polynomials are left
//! unnormalized, `T_k(x) = cos(k·arccos x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyFamily {
    LegendreNormalized,
    ChebyshevFirstKind,
}

pub(crate) fn check_unit<T: Real>(x: T) -> Result<()> {
    if x.abs() <= T::one() {
        Ok(())
    } else {
        Err(Error::OutsideDomain { value: x.to_f64_lossy() })
    }
}

/// Coefficient `a_k = k / √(4k² − 1)` of the normalized recurrence
/// `x P_k = a_{k+1} P_{k+1} + a_k P_{k−1}`.
pub fn legendre_recurrence_coeff<T: Real>(k: usize) -> T {
    if k == 0 {
        return T::zero();
    }
    let k = T::from_usize_lossy(k);
    k / (T::lit(4.0) * k * k - T::one()).sqrt()
}

/// Evaluates a single polynomial of degree `k` at `x`.
pub fn eval_poly<T: Real>(family: PolyFamily, k: usize, x: T) -> Result<T> {
    check_unit(x)?;
    let mut out = vec![T::zero(); k + 1];
    fill_family(family, x, &mut out);
    Ok(out[k])
}

/// All degrees `0..=max_k` from one recurrence sweep.
pub fn eval_family<T: Real>(family: PolyFamily, max_k: usize, x: T) -> Result<Vec<T>> {
    check_unit(x)?;
    let mut out = vec![T::zero(); max_k + 1];
    fill_family(family, x, &mut out);
    Ok(out)
}

/// Unchecked sweep filling `out[k]` for `k < out.len()`.
pub fn fill_family<T: Real>(family: PolyFamily, x: T, out: &mut [T]) {
    match family {
        PolyFamily::LegendreNormalized => fill_legendre(x, out),
        PolyFamily::ChebyshevFirstKind => fill_chebyshev(x, out),
    }
}

pub(crate) fn fill_legendre<T: Real>(x: T, out: &mut [T]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = T::one();
    if n == 1 {
        return;
    }
    let mut a_prev = T::zero();
    for k in 0..n - 1 {
        let a_next = legendre_recurrence_coeff::<T>(k + 1);
        let prev = if k == 0 { T::zero() } else { out[k - 1] };
        out[k + 1] = (x * out[k] - a_prev * prev) / a_next;
        a_prev = a_next;
    }
}

fn fill_chebyshev<T: Real>(x: T, out: &mut [T]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = T::one();
    if n == 1 {
        return;
    }
    out[1] = x;
    let two = T::lit(2.0);
    for k in 1..n - 1 {
        out[k + 1] = two * x * out[k] - out[k - 1];
    }
}
