//! Closed-form theoretical quantities and one-sided inequality checks.
//!
//! Logarithms are natural unless written `log2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::indexset::{cardinality_bound, IndexSet};
use crate::prolate::ProlateBasis1D;
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;
use crate::tensorbasis::{chebyshev_lobatto, TensorBasis};

fn check_w(w: f64) -> Result<()> {
    if w >= 1.0 && w.is_finite() {
        Ok(())
    } else {
        invalid(format!("bandwidth must be >= 1, got {w}"))
    }
}

fn check_d(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        invalid(format!("dimension must be 1, 2 or 3, got {d}"))
    }
}

/// `γ(w) = ⌈log2(24w)⌉`, computed without floating-point logarithms.
pub fn gamma_w(w: f64) -> Result<u32> {
    check_w(w)?;
    let target = 24.0 * w;
    let mut g = 0u32;
    while 2f64.powi(g as i32) < target {
        g += 1;
    }
    Ok(g)
}

/// `j★(w) = ⌊4w⌋ − 1`.
pub fn j_star(w: f64) -> Result<usize> {
    check_w(w)?;
    Ok((4.0 * w).floor() as usize - 1)
}

fn checked_pow(base: u128, exp: u32, what: &str) -> Result<u128> {
    base.checked_pow(exp).ok_or_else(|| Error::Overflow(what.into()))
}

fn poly_in_ng(n: usize, w: f64, coeffs: &[u128], what: &str) -> Result<u128> {
    // Σ_k coeffs[k]·(n^γ)^k
    let g = gamma_w(w)?;
    let ng = checked_pow(n as u128, g, what)?;
    let mut acc: u128 = 0;
    let mut power: u128 = 1;
    for (k, &c) in coeffs.iter().enumerate() {
        if k > 0 {
            power = power.checked_mul(ng).ok_or_else(|| Error::Overflow(what.into()))?;
        }
        let term = c.checked_mul(power).ok_or_else(|| Error::Overflow(what.into()))?;
        acc = acc.checked_add(term).ok_or_else(|| Error::Overflow(what.into()))?;
    }
    Ok(acc)
}

/// `B(1,n) = n^γ+1`, `B(2,n) = 3n^{2γ}+4n^γ+2`, `B(3,n) = 7n^{3γ}+12n^{2γ}+8n^γ+3`.
pub fn b_dn(d: usize, n: usize, w: f64) -> Result<u128> {
    check_d(d)?;
    if n < 1 {
        return invalid("n must be at least 1");
    }
    let c: &[u128] = match d {
        1 => &[1, 1],
        2 => &[2, 4, 3],
        _ => &[3, 8, 12, 7],
    };
    poly_in_ng(n, w, c, "B(d,n)")
}

/// `M(1,n) = 1`, `M(2,n) = 2n^γ+1`, `M(3,n) = 4n^{2γ}+4n^γ+2`.
pub fn m_dn(d: usize, n: usize, w: f64) -> Result<u128> {
    check_d(d)?;
    if n < 1 {
        return invalid("n must be at least 1");
    }
    let c: &[u128] = match d {
        1 => &[1],
        2 => &[1, 2],
        _ => &[2, 4, 4],
    };
    poly_in_ng(n, w, c, "M(d,n)")
}

/// `N★ = ⌈max{2⌊e·w⌋+1, ln(3/(c★·ε))/ln(3/2)}⌉`.
pub fn n_star(w: f64, eps: f64, c_star: f64) -> Result<usize> {
    check_w(w)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("epsilon must lie in (0,1], got {eps}"));
    }
    if !(c_star > 0.0 && c_star <= 1.0) {
        return invalid(format!("c_star must lie in (0,1], got {c_star}"));
    }
    let a = 2.0 * (std::f64::consts::E * w).floor() + 1.0;
    let b = (3.0 / (c_star * eps)).ln() / 1.5f64.ln();
    Ok(a.max(b).ceil() as usize)
}

/// [`n_star`] with `ln c★` supplied directly, for eigenvalues below the
/// floating-point range.
pub fn n_star_ln(w: f64, eps: f64, ln_c_star: f64) -> Result<usize> {
    check_w(w)?;
    if !(eps > 0.0 && eps <= 1.0) || !(ln_c_star <= 0.0) {
        return invalid("epsilon and c_star must lie in (0,1]");
    }
    let a = 2.0 * (std::f64::consts::E * w).floor() + 1.0;
    let b = (3f64.ln() - ln_c_star - eps.ln()) / 1.5f64.ln();
    Ok(a.max(b).ceil() as usize)
}

/// `c(δ) = (1−δ)ln(1−δ) + δ`.
pub fn c_delta(delta: f64) -> f64 {
    (1.0 - delta) * (1.0 - delta).ln() + delta
}

/// Sufficient sample count `(2#Λ)^{2γ} ln(#Λ/β) / c(δ)`.
pub fn min_samples(d: usize, n: usize, w: f64, delta: f64, beta: f64) -> Result<f64> {
    check_d(d)?;
    check_w(w)?;
    if !(delta > 0.0 && delta < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return invalid("delta and beta must lie in (0,1)");
    }
    if d == 3 && n < 26 {
        return invalid("the three-dimensional statement needs n >= 26");
    }
    let card = IndexSet::hyperbolic_cross(d, n)?.len() as f64;
    let g = gamma_w(w)? as f64;
    Ok((2.0 * card).powf(2.0 * g) * (card / beta).ln() / c_delta(delta))
}

/// `√(1−δ) / (2√#Λ·B(d,n))`.
pub fn eps_condition(d: usize, n: usize, w: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return invalid("delta must lie in [0,1)");
    }
    let card = IndexSet::hyperbolic_cross(d, n)?.len() as f64;
    let b = b_dn(d, n, w)? as f64;
    Ok((1.0 - delta).sqrt() / (2.0 * card.sqrt() * b))
}

/// `(2#Λ)^{2γ(w)}`.
pub fn kappa_bound(d: usize, n: usize, w: f64) -> Result<f64> {
    let card = IndexSet::hyperbolic_cross(d, n)?.len() as f64;
    Ok((2.0 * card).powi(2 * gamma_w(w)? as i32))
}

#[derive(Clone, Debug, Serialize)]
pub struct SupNormRow {
    pub j: usize,
    pub sup_sq: f64,
    pub bound_gamma: f64,
    pub gamma_ok: bool,
    pub bound_split: f64,
    pub split_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupNormReport {
    pub w: f64,
    pub rows: Vec<SupNormRow>,
}

impl SupNormReport {
    pub fn gamma_violations(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| !r.gamma_ok).map(|r| r.j).collect()
    }

    pub fn split_violations(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| !r.split_ok).map(|r| r.j).collect()
    }
}

/// Grid maxima of `|φ_{w,j}|²` on 4097 Chebyshev–Lobatto nodes against the
/// index-dependent bounds.
pub fn verify_supnorm<T: Real>(basis: &ProlateBasis1D<T>, jmax: usize) -> Result<SupNormReport> {
    let w = basis.w().to_f64_lossy();
    let g = gamma_w(w)? as i32;
    let js = j_star(w)?;
    if jmax > basis.jmax() {
        return Err(Error::IndexOutOfRange { index: jmax, max: basis.jmax() });
    }
    let grid = chebyshev_lobatto::<T>(4097);
    let sups: Vec<f64> = grid
        .par_iter()
        .map(|&x| {
            let mut v = vec![T::zero(); jmax + 1];
            basis.evaluate_all(x, &mut v).expect("grid inside [-1,1]");
            v.into_iter().map(|p| (p * p).to_f64_lossy()).collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; jmax + 1],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    let four_w_pi = 4.0 * w / std::f64::consts::PI;
    let rows = sups
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let bound_gamma = if j == 0 { four_w_pi } else { ((j + 1) as f64).powi(g) };
            let bound_split = if j <= js { four_w_pi } else { 2.4f64 * 2.4 * (j + 1) as f64 };
            SupNormRow { j, sup_sq: s, bound_gamma, gamma_ok: s <= bound_gamma, bound_split, split_ok: s <= bound_split }
        })
        .collect();
    Ok(SupNormReport { w, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct MuBoundsReport {
    pub w: f64,
    pub lower_index: usize,
    pub mu_lower: f64,
    pub lower_ok: bool,
    pub upper_index: usize,
    pub mu_upper: f64,
    pub upper_ok: bool,
    /// Largest constant compatible with the exponential upper estimate.
    pub c_upper_empirical: Option<f64>,
    /// Largest constant compatible with the exponential lower estimate.
    pub c_lower_empirical: Option<f64>,
    /// Number of eigenvalues above 1/2.
    pub count_above_half: usize,
    /// First index with μ < 0.99 and first with μ < 0.01.
    pub plunge_window: (Option<usize>, Option<usize>),
}

impl MuBoundsReport {
    pub fn split_holds(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Checks `μ_{⌊4w⌋−1} ≥ 1/2 ≥ μ_{⌈4w⌉}` and reports the constants implied by
/// the exponential estimates around `4w/π` (never asserted).
pub fn verify_mu_bounds<T: Real>(basis: &ProlateBasis1D<T>) -> Result<MuBoundsReport> {
    let w = basis.w().to_f64_lossy();
    check_w(w)?;
    let lo = (4.0 * w).floor() as usize - 1;
    let hi = (4.0 * w).ceil() as usize;
    if hi > basis.jmax() {
        return Err(Error::IndexOutOfRange { index: hi, max: basis.jmax() });
    }
    let mu: Vec<f64> = basis.mu().iter().map(|m| m.to_f64_lossy()).collect();
    let ln_mu: Vec<f64> = basis.ln_mu().iter().map(|m| m.to_f64_lossy()).collect();
    let ceil_r = (4.0 * w / std::f64::consts::PI).ceil() as usize;
    let floor_r = (4.0 * w / std::f64::consts::PI).floor() as usize;
    let mut c_up: Option<f64> = None;
    for (j, &l) in ln_mu.iter().enumerate() {
        if j > ceil_r {
            let c = (10f64.ln() - l) / (j - ceil_r) as f64;
            c_up = Some(c_up.map_or(c, |v| v.min(c)));
        }
    }
    let mut c_lo: Option<f64> = None;
    for n in 1..=floor_r {
        let j = n - 1;
        if j > basis.jmax() || floor_r <= n {
            continue;
        }
        let c = (10.0 / (1.0 - mu[j])).ln() / (floor_r - n) as f64;
        c_lo = Some(c_lo.map_or(c, |v| v.min(c)));
    }
    Ok(MuBoundsReport {
        w,
        lower_index: lo,
        mu_lower: mu[lo],
        lower_ok: mu[lo] >= 0.5,
        upper_index: hi,
        mu_upper: mu[hi],
        upper_ok: 0.5 >= mu[hi],
        c_upper_empirical: c_up,
        c_lower_empirical: c_lo,
        count_above_half: mu.iter().filter(|&&m| m > 0.5).count(),
        plunge_window: (mu.iter().position(|&m| m < 0.99), mu.iter().position(|&m| m < 0.01)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TailViolation {
    pub k: usize,
    pub j: usize,
    pub coeff: f64,
    pub bound: f64,
}

/// Checks `|β^k_j| ≤ 2^{−j}/μ_{w,k}` for every stored `j ≥ 2(⌊e·w⌋+1)`,
/// comparing logarithms so that underflowing bounds are handled.
pub fn verify_tail_bound<T: Real>(basis: &ProlateBasis1D<T>) -> Vec<TailViolation> {
    let w = basis.w().to_f64_lossy();
    let start = 2 * ((std::f64::consts::E * w).floor() as usize + 1);
    let mut bad = Vec::new();
    for k in 0..=basis.jmax() {
        let beta = basis.coeffs(k).expect("k in range");
        let ln_mu = basis.ln_mu()[k].to_f64_lossy();
        for (j, &b) in beta.iter().enumerate().skip(start) {
            let b = b.to_f64_lossy().abs();
            if b == 0.0 {
                continue;
            }
            let ln_bound = -(j as f64) * std::f64::consts::LN_2 - ln_mu;
            if b.ln() > ln_bound {
                bad.push(TailViolation { k, j, coeff: b, bound: ln_bound.exp() });
            }
        }
    }
    bad
}

/// Worst absolute deviation of the Gram matrix from the identity under
/// 512-node Gauss–Legendre quadrature in L²_u.
pub fn orthonormality_error<T: Real>(basis: &ProlateBasis1D<T>) -> T {
    let q = GaussLegendre::<T>::new(512);
    let n = basis.jmax() + 1;
    let vals: Vec<Vec<T>> = q
        .nodes
        .iter()
        .map(|&x| {
            let mut v = vec![T::zero(); n];
            basis.evaluate_all(x, &mut v).expect("node inside [-1,1]");
            v
        })
        .collect();
    let half = T::lit(0.5);
    let mut worst = T::zero();
    for a in 0..n {
        for b in a..n {
            let g: T = vals
                .iter()
                .zip(&q.weights)
                .map(|(v, &wt)| wt * half * v[a] * v[b])
                .sum();
            let target = if a == b { T::one() } else { T::zero() };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// `max_j ‖Q_w φ_j − μ_j φ_j‖_∞` over a Chebyshev–Lobatto grid.
pub fn eigen_residual<T: Real>(basis: &ProlateBasis1D<T>, jmax: usize, grid_size: usize) -> Result<T> {
    let grid = chebyshev_lobatto::<T>(grid_size);
    let mut worst = T::zero();
    for j in 0..=jmax {
        let q = basis.apply_qw(j, &grid)?;
        let phi = basis.evaluate_many(j, &grid)?;
        let mu = basis.mu()[j];
        for (a, b) in q.iter().zip(&phi) {
            worst = worst.max((*a - mu * *b).abs());
        }
    }
    Ok(worst)
}

/// `Σ_{k=1}^{n−1}(2k+1)(#Λ_k)² ≥ (#Λ₀)²/n` for the cross of order n.
pub fn slice_inequality(d: usize, n: usize) -> Result<(f64, f64, bool)> {
    let set = IndexSet::hyperbolic_cross(d, n)?;
    let sizes = set.slice_sizes()?;
    let lhs: f64 = sizes
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &s)| (2 * k + 1) as f64 * (s as f64).powi(2))
        .sum();
    let rhs = (sizes[0] as f64).powi(2) / n as f64;
    Ok((lhs, rhs, lhs >= rhs))
}

/// One line of the verification table.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed, detail: detail.into() }
    }
}

pub const VERIFY_BANDWIDTHS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

/// Every executable inequality, as run by the `verify` command. The slow
/// tier adds the three-dimensional Christoffel check at n = 26.
pub fn verify_suite(slow: bool) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let per_w: Vec<Vec<CheckResult>> = VERIFY_BANDWIDTHS
        .par_iter()
        .map(|&w| prolate_checks(w))
        .collect();
    out.extend(per_w.into_iter().flatten());

    let g_ok = (0..=400).all(|i| {
        let w = 1.0 + i as f64 * 0.25;
        let g = gamma_w(w).unwrap();
        2f64.powi(g as i32 - 1) >= 4.0 * w / std::f64::consts::PI
    });
    out.push(CheckResult::new("gamma consistency 2^(g-1) >= 4w/pi, w in [1,101]", g_ok, ""));

    let slice2: Vec<usize> = (2..=200).filter(|&n| !slice_inequality(2, n).unwrap().2).collect();
    out.push(CheckResult::new("slice inequality d=2, 2<=n<=200", slice2.is_empty(), format!("violations at n = {slice2:?}")));
    let slice3: Vec<usize> = (26..=60).filter(|&n| !slice_inequality(3, n).unwrap().2).collect();
    out.push(CheckResult::new("slice inequality d=3, 26<=n<=60", slice3.is_empty(), format!("violations at n = {slice3:?}")));

    let card_bad: Vec<usize> = (26..=60)
        .filter(|&n| IndexSet::hyperbolic_cross(3, n).unwrap().len() as f64 >= cardinality_bound(3, n))
        .collect();
    out.push(CheckResult::new("cardinality bound d=3, 26<=n<=60", card_bad.is_empty(), format!("violations at n = {card_bad:?}")));
    let l0_bad: Vec<usize> = (26..=60)
        .filter(|&n| {
            let s = IndexSet::hyperbolic_cross(3, n).unwrap().slice_sizes().unwrap();
            s[0] as f64 > n as f64 * (1.0 + (n as f64).ln())
        })
        .collect();
    out.push(CheckResult::new("slice size #L0 <= n(1+ln n), d=3, 26<=n<=60", l0_bad.is_empty(), format!("violations at n = {l0_bad:?}")));
    let mono_bad: Vec<(usize, usize)> = [(2usize, 200usize), (3, 60)]
        .iter()
        .flat_map(|&(d, nmax)| (1..=nmax).map(move |n| (d, n)))
        .filter(|&(d, n)| !IndexSet::hyperbolic_cross(d, n).unwrap().check_monotonicity())
        .collect();
    out.push(CheckResult::new("slice monotonicity d=2 (n<=200), d=3 (n<=60)", mono_bad.is_empty(), format!("{mono_bad:?}")));

    out.extend(kappa_checks(slow));
    out
}

fn prolate_checks(w: f64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let jmax = (4.0 * w / std::f64::consts::PI).ceil() as usize + 10;
    let jbuild = jmax.max(80).max((4.0 * w).ceil() as usize);
    let basis = match ProlateBasis1D::<f64>::new(w, jbuild) {
        Ok(b) => b,
        Err(e) => {
            out.push(CheckResult::new(format!("prolate build w={w}"), false, e.to_string()));
            return out;
        }
    };
    out.push(CheckResult::new(
        format!("prolate ordering w={w}, j<={jbuild}"),
        basis.ordering_violations().is_empty(),
        format!("violations {:?}", basis.ordering_violations()),
    ));
    let small = ProlateBasis1D::<f64>::new(w, jmax).expect("smaller build succeeds");
    let orth = orthonormality_error(&small);
    out.push(CheckResult::new(format!("orthonormality w={w}, j<={jmax}"), orth <= 1e-8, format!("max Gram error {orth:.3e}")));
    match eigen_residual(&small, jmax, 65) {
        Ok(r) => out.push(CheckResult::new(format!("eigen-residual w={w}, j<={jmax}"), r <= 1e-6, format!("max residual {r:.3e}"))),
        Err(e) => out.push(CheckResult::new(format!("eigen-residual w={w}"), false, e.to_string())),
    }
    match verify_mu_bounds(&basis) {
        Ok(r) => out.push(CheckResult::new(
            format!("mu split w={w}: mu[{}] >= 1/2 >= mu[{}]", r.lower_index, r.upper_index),
            r.split_holds(),
            format!(
                "mu[{}] = {:.4e}, mu[{}] = {:.4e}; {} eigenvalues exceed 1/2; empirical C: upper {:?}, lower {:?}",
                r.lower_index, r.mu_lower, r.upper_index, r.mu_upper, r.count_above_half, r.c_upper_empirical, r.c_lower_empirical
            ),
        )),
        Err(e) => out.push(CheckResult::new(format!("mu split w={w}"), false, e.to_string())),
    }
    match verify_supnorm(&basis, 80) {
        Ok(r) => {
            let g = r.gamma_violations();
            out.push(CheckResult::new(format!("sup-norm gamma form w={w}, j<=80"), g.is_empty(), format!("violations at j = {g:?}")));
            let s = r.split_violations();
            out.push(CheckResult::new(format!("sup-norm split form w={w}, j<=80"), s.is_empty(), format!("violations at j = {s:?}")));
        }
        Err(e) => out.push(CheckResult::new(format!("sup-norm w={w}"), false, e.to_string())),
    }
    let tail = verify_tail_bound(&basis);
    out.push(CheckResult::new(
        format!("Legendre tail bound w={w}, k<={jbuild}"),
        tail.is_empty(),
        format!("{} violations", tail.len()),
    ));
    out
}

fn kappa_checks(slow: bool) -> Vec<CheckResult> {
    let mut cases: Vec<(f64, usize, usize, usize)> = Vec::new();
    for &w in &VERIFY_BANDWIDTHS {
        for n in [1, 5, 10, 20, 30, 40] {
            cases.push((w, 1, n, 4097));
        }
        for n in [1, 3, 6, 12] {
            cases.push((w, 2, n, 129));
        }
    }
    if slow {
        cases.push((1.0, 3, 26, 65));
    }
    cases
        .into_par_iter()
        .map(|(w, d, n, g)| {
            let name = format!("kappa bound w={w}, d={d}, n={n}");
            let basis = match TensorBasis::<f64>::slepian_cross(w, d, n) {
                Ok(b) => b,
                Err(e) => return CheckResult::new(name, false, e.to_string()),
            };
            let est = basis.christoffel_sup(g).map(|e| e.value).unwrap_or(f64::INFINITY);
            let bound = kappa_bound(d, n, w).unwrap_or(0.0);
            CheckResult::new(name, est <= bound, format!("grid estimate {est:.4e} vs bound {bound:.4e}"))
        })
        .collect()
}
