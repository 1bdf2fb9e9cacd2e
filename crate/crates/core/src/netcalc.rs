//! Fully connected ReLU networks, exact calculus on them (composition,
//! parallelization, identity, linear combination) and certified emulation
//! of products, Legendre polynomials and tensor Slepian functions.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{b_dn, eps_condition, m_dn, n_star_ln};
use crate::error::{invalid, Error, Result};
use crate::indexset::IndexSet;
use crate::linalg::{Mat, QrSvd};
use crate::lstsq::{complex_matvec, design_matrix, fit_matrix, FitResult};
use crate::polybasis::check_unit;
use crate::prolate::ProlateBasis1D;
use crate::sampling::SampleSet;
use crate::scalar::Real;
use crate::tensorbasis::{chebyshev_lobatto, grid_point, Family1D, TensorBasis};

/// Affine map `x ↦ A x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Layer<T> {
    pub weights: Mat<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Layer<T> {
    pub fn new(weights: Mat<T>, bias: Vec<T>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::DimensionMismatch { expected: weights.rows(), got: bias.len() });
        }
        Ok(Layer { weights, bias })
    }

    fn nnz(&self) -> usize {
        self.weights.count_nonzero() + self.bias.iter().filter(|b| **b != T::zero()).count()
    }
}

/// `R(Φ)(x) = A_L ϱ(A_{L−1} ϱ(… ϱ(A_1 x + b_1) …) + b_{L−1}) + b_L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Network<T> {
    input_dim: usize,
    layers: Vec<Layer<T>>,
}

impl<T: Real> Network<T> {
    pub fn new(input_dim: usize, layers: Vec<Layer<T>>) -> Result<Self> {
        let net = Network { input_dim, layers };
        net.validate()?;
        Ok(net)
    }

    /// One-layer network, i.e. an affine map.
    pub fn affine(weights: Mat<T>, bias: Vec<T>) -> Result<Self> {
        let d = weights.cols();
        Self::new(d, vec![Layer::new(weights, bias)?])
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return invalid("a network needs at least one layer");
        }
        if self.input_dim == 0 {
            return invalid("input dimension must be positive");
        }
        let mut prev = self.input_dim;
        for l in &self.layers {
            let (r, c) = (l.weights.rows(), l.weights.cols());
            if l.weights.as_slice().len() != r * c {
                return Err(Error::DimensionMismatch { expected: r * c, got: l.weights.as_slice().len() });
            }
            if c != prev {
                return Err(Error::DimensionMismatch { expected: prev, got: c });
            }
            if l.bias.len() != r || r == 0 {
                return Err(Error::DimensionMismatch { expected: r, got: l.bias.len() });
            }
            prev = r;
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weights.rows()).unwrap_or(0)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// `L(Φ)`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `W(Φ)`: nonzero weights and biases.
    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::nnz).sum()
    }

    /// Total number of weights and biases, zero or not.
    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.rows() * (l.weights.cols() + 1)).sum()
    }

    /// `(d_0, d_1, …, d_L)`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim).chain(self.layers.iter().map(|l| l.weights.rows())).collect()
    }

    pub fn realize(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let last = self.layers.len() - 1;
        let mut cur = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = layer.weights.matvec(&cur);
            for (v, b) in next.iter_mut().zip(&layer.bias) {
                *v += *b;
                if l < last && *v < T::zero() {
                    *v = T::zero();
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Row-compressed copy for fast repeated evaluation.
    pub fn compile(&self) -> CompiledNetwork<T> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut row_ptr = vec![0];
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for i in 0..l.weights.rows() {
                    for (j, &v) in l.weights.row(i).iter().enumerate() {
                        if v != T::zero() {
                            cols.push(j as u32);
                            vals.push(v);
                        }
                    }
                    row_ptr.push(cols.len());
                }
                SparseLayer { row_ptr, cols, vals, bias: l.bias.clone() }
            })
            .collect();
        CompiledNetwork {
            input_dim: self.input_dim,
            output_dim: self.output_dim(),
            max_width: self.widths().into_iter().max().unwrap_or(1),
            layers,
        }
    }

    /// Outputs at many points (flat, `input_dim` entries each), in parallel.
    pub fn realize_many(&self, points: &[T]) -> Result<Vec<T>> {
        self.compile().realize_many(points)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Network<T> = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }
}

struct SparseLayer<T> {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
    bias: Vec<T>,
}

/// Evaluation plan skipping zero weights.
pub struct CompiledNetwork<T> {
    input_dim: usize,
    output_dim: usize,
    max_width: usize,
    layers: Vec<SparseLayer<T>>,
}

impl<T: Real> CompiledNetwork<T> {
    fn eval(&self, x: &[T], a: &mut Vec<T>, b: &mut Vec<T>, out: &mut [T]) {
        a.clear();
        a.extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            b.clear();
            for (i, &bias) in layer.bias.iter().enumerate() {
                let mut s = bias;
                for k in layer.row_ptr[i]..layer.row_ptr[i + 1] {
                    s += layer.vals[k] * a[layer.cols[k] as usize];
                }
                if l < last && s < T::zero() {
                    s = T::zero();
                }
                b.push(s);
            }
            std::mem::swap(a, b);
        }
        out.copy_from_slice(a);
    }

    pub fn realize(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let mut out = vec![T::zero(); self.output_dim];
        let (mut a, mut b) = (Vec::with_capacity(self.max_width), Vec::with_capacity(self.max_width));
        self.eval(x, &mut a, &mut b, &mut out);
        Ok(out)
    }

    pub fn realize_many(&self, points: &[T]) -> Result<Vec<T>> {
        let d = self.input_dim;
        if !points.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, got: points.len() % d });
        }
        let n = points.len() / d;
        let mut out = vec![T::zero(); n * self.output_dim];
        let w = self.max_width;
        out.par_chunks_mut(self.output_dim)
            .zip(points.par_chunks(d))
            .for_each_init(
                || (Vec::with_capacity(w), Vec::with_capacity(w)),
                |(a, b), (o, x)| self.eval(x, a, b, o),
            );
        Ok(out)
    }
}

fn selector<T: Real>(input_dim: usize, picks: &[usize]) -> Network<T> {
    let a = Mat::from_fn(picks.len(), input_dim, |i, j| if picks[i] == j { T::one() } else { T::zero() });
    Network::affine(a, vec![T::zero(); picks.len()]).expect("selector dimensions are consistent")
}

/// `Φ¹ ⊙ Φ²`, realizing `R(Φ¹) ∘ R(Φ²)` with `L₁ + L₂ − 1` layers.
pub fn concat<T: Real>(phi1: &Network<T>, phi2: &Network<T>) -> Result<Network<T>> {
    if phi1.input_dim != phi2.output_dim() {
        return Err(Error::DimensionMismatch { expected: phi2.output_dim(), got: phi1.input_dim });
    }
    let l2 = phi2.layers.len();
    let inner = &phi2.layers[l2 - 1];
    let outer = &phi1.layers[0];
    let weights = outer.weights.matmul(&inner.weights)?;
    let mut bias = outer.weights.matvec(&inner.bias);
    for (v, b) in bias.iter_mut().zip(&outer.bias) {
        *v += *b;
    }
    let mut layers: Vec<Layer<T>> = phi2.layers[..l2 - 1].to_vec();
    layers.push(Layer { weights, bias });
    layers.extend_from_slice(&phi1.layers[1..]);
    Network::new(phi2.input_dim, layers)
}

/// `P(Φ¹, Φ²)` on a shared input: realizes `(R(Φ¹), R(Φ²))`.
pub fn parallelize<T: Real>(phi1: &Network<T>, phi2: &Network<T>) -> Result<Network<T>> {
    if phi1.input_dim != phi2.input_dim {
        return Err(Error::DimensionMismatch { expected: phi1.input_dim, got: phi2.input_dim });
    }
    if phi1.depth() != phi2.depth() {
        return invalid(format!(
            "parallelization needs equal depths, got {} and {}; pad first",
            phi1.depth(),
            phi2.depth()
        ));
    }
    let mut layers = Vec::with_capacity(phi1.depth());
    for (l, (a, b)) in phi1.layers.iter().zip(&phi2.layers).enumerate() {
        let (r1, c1) = (a.weights.rows(), a.weights.cols());
        let (r2, c2) = (b.weights.rows(), b.weights.cols());
        let weights = if l == 0 {
            Mat::from_fn(r1 + r2, c1, |i, j| if i < r1 { a.weights[(i, j)] } else { b.weights[(i - r1, j)] })
        } else {
            Mat::from_fn(r1 + r2, c1 + c2, |i, j| match (i < r1, j < c1) {
                (true, true) => a.weights[(i, j)],
                (false, false) => b.weights[(i - r1, j - c1)],
                _ => T::zero(),
            })
        };
        let bias = a.bias.iter().chain(&b.bias).copied().collect();
        layers.push(Layer { weights, bias });
    }
    Network::new(phi1.input_dim, layers)
}

fn parallelize_all<T: Real>(nets: &[Network<T>]) -> Result<Network<T>> {
    let (first, rest) = nets.split_first().ok_or_else(|| Error::InvalidParameter("no networks given".into()))?;
    rest.iter().try_fold(first.clone(), |acc, n| parallelize(&acc, n))
}

/// Exact identity on `R^d` with `L` layers and `W ≤ 2dL`.
pub fn identity_net<T: Real>(d: usize, depth: usize) -> Result<Network<T>> {
    if d == 0 || depth == 0 {
        return invalid("identity network needs d >= 1 and L >= 1");
    }
    if depth == 1 {
        return Network::affine(Mat::identity(d), vec![T::zero(); d]);
    }
    let up = Mat::from_fn(2 * d, d, |i, j| {
        if i == j {
            T::one()
        } else if i == j + d {
            -T::one()
        } else {
            T::zero()
        }
    });
    let down = Mat::from_fn(d, 2 * d, |i, j| {
        if j == i {
            T::one()
        } else if j == i + d {
            -T::one()
        } else {
            T::zero()
        }
    });
    let mut layers = vec![Layer { weights: up, bias: vec![T::zero(); 2 * d] }];
    for _ in 0..depth - 2 {
        layers.push(Layer { weights: Mat::identity(2 * d), bias: vec![T::zero(); 2 * d] });
    }
    layers.push(Layer { weights: down, bias: vec![T::zero(); d] });
    Network::new(d, layers)
}

/// Extends `phi` to exactly `depth` layers without changing its realization.
pub fn pad_depth<T: Real>(phi: &Network<T>, depth: usize) -> Result<Network<T>> {
    let l = phi.depth();
    if depth < l {
        return invalid(format!("cannot pad a depth-{l} network down to {depth}"));
    }
    if depth == l {
        return Ok(phi.clone());
    }
    concat(&identity_net(phi.output_dim(), depth - l + 1)?, phi)
}

/// Network realizing `Σ_j α_j R(Φ_j)`, depth `max_j L(Φ_j)`.
pub fn linear_combination<T: Real>(nets: &[Network<T>], weights: &[T]) -> Result<Network<T>> {
    if nets.is_empty() || nets.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: nets.len(), got: weights.len() });
    }
    let k = nets[0].output_dim();
    if let Some(bad) = nets.iter().find(|n| n.output_dim() != k) {
        return Err(Error::DimensionMismatch { expected: k, got: bad.output_dim() });
    }
    let lmax = nets.iter().map(Network::depth).max().unwrap_or(1);
    let padded: Vec<Network<T>> = nets.iter().map(|n| pad_depth(n, lmax)).collect::<Result<_>>()?;
    let p = parallelize_all(&padded)?;
    let sum = Mat::from_fn(k, k * nets.len(), |i, j| if j % k == i { weights[j / k] } else { T::zero() });
    concat(&Network::affine(sum, vec![T::zero(); k])?, &p)
}

/// Number of sawtooth levels for `|R(x,y) − xy| ≤ ε/2` on `[−B,B]²`.
fn squarer_levels(eps: f64, b: f64) -> usize {
    let mut s = 1usize;
    // B²·4^{−(s+1)} ≤ ε/2
    while b * b * 0.25f64.powi(s as i32 + 1) > 0.5 * eps {
        s += 1;
    }
    s
}

fn product_net_raw<T: Real>(eps: f64, b: f64) -> Result<Network<T>> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("product accuracy must lie in (0,1), got {eps}"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return invalid(format!("product range must be positive, got {b}"));
    }
    let s = squarer_levels(eps, b);
    let t = |v: f64| T::lit(v);
    let inv = 1.0 / (2.0 * b);
    let first = Mat::from_vec(
        4,
        2,
        vec![t(inv), t(inv), t(-inv), t(-inv), t(inv), t(-inv), t(-inv), t(inv)],
    )?;
    let mut layers = vec![Layer { weights: first, bias: vec![T::zero(); 4] }];
    // Per square: units (ϱ(g), ϱ(g−½), ϱ(g−1), F); g starts at u = |·|/(2B).
    let mut start = Mat::zeros(8, 4);
    let mut bias = vec![T::zero(); 8];
    for q in 0..2 {
        for unit in 0..4 {
            start[(4 * q + unit, 2 * q)] = T::one();
            start[(4 * q + unit, 2 * q + 1)] = T::one();
        }
        bias[4 * q + 1] = t(-0.5);
        bias[4 * q + 2] = t(-1.0);
    }
    layers.push(Layer { weights: start, bias });
    // hat(g) = 2ϱ(g) − 4ϱ(g−½) + 2ϱ(g−1); F_k = F_{k−1} − hat/4^k.
    let hat = [2.0, -4.0, 2.0];
    for k in 1..s {
        let scale = 0.25f64.powi(k as i32);
        let mut a = Mat::zeros(8, 8);
        let mut bias = vec![T::zero(); 8];
        for q in 0..2 {
            for unit in 0..3 {
                for (src, h) in hat.iter().enumerate() {
                    a[(4 * q + unit, 4 * q + src)] = t(*h);
                }
            }
            for (src, h) in hat.iter().enumerate() {
                a[(4 * q + 3, 4 * q + src)] = t(-h * scale);
            }
            a[(4 * q + 3, 4 * q + 3)] = T::one();
            bias[4 * q + 1] = t(-0.5);
            bias[4 * q + 2] = t(-1.0);
        }
        layers.push(Layer { weights: a, bias });
    }
    let scale = 0.25f64.powi(s as i32);
    let mut out = Mat::zeros(1, 8);
    for (q, sign) in [(0usize, 1.0), (1, -1.0)] {
        for (src, h) in hat.iter().enumerate() {
            out[(0, 4 * q + src)] = t(-sign * b * b * h * scale);
        }
        out[(0, 4 * q + 3)] = t(sign * b * b);
    }
    layers.push(Layer { weights: out, bias: vec![T::zero()] });
    Network::new(2, layers)
}

/// Worst error of a certified construction on its grid.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub sup_error: f64,
    pub bound: f64,
    pub grid_points: usize,
}

#[derive(Clone, Debug)]
pub struct Certified<T> {
    pub net: Network<T>,
    pub certificate: Certificate,
}

/// Approximate multiplication on `[−B,B]²`:
/// `xy = B²(u_s² − u_t²)` with `u_{s,t} = |x ± y|/(2B) ∈ [0,1]`, each square
/// replaced by the piecewise-linear interpolant `f_s(u) = u − Σ_{k≤s} g_k(u)/4^k`
/// of the sawtooth compositions `g_k`. Since `0 ≤ f_s − u² ≤ 4^{−(s+1)}` for
/// both squares, `|R − xy| ≤ B²·4^{−(s+1)}`, and `s` is the smallest level
/// count making that at most `ε/2`. Certified on a 257² Chebyshev grid.
pub fn product_net<T: Real>(eps: f64, b: f64) -> Result<Certified<T>> {
    let net = product_net_raw::<T>(eps, b)?;
    let nodes: Vec<T> = chebyshev_lobatto::<T>(257).into_iter().map(|v| v * T::lit(b)).collect();
    let pts: Vec<T> = (0..257 * 257).flat_map(|f| grid_point(&nodes, 2, f)).collect();
    let vals = net.realize_many(&pts)?;
    let err = vals
        .iter()
        .zip(pts.chunks(2))
        .map(|(v, p)| (*v - p[0] * p[1]).abs().to_f64_lossy())
        .fold(0.0, f64::max);
    certify("product network", net, err, eps, pts.len() / 2)
}

fn certify<T>(what: &str, net: Network<T>, err: f64, bound: f64, grid_points: usize) -> Result<Certified<T>> {
    if err <= bound {
        Ok(Certified { net, certificate: Certificate { sup_error: err, bound, grid_points } })
    } else {
        Err(Error::CertificationFailed { what: what.into(), error: err, bound })
    }
}

/// `Σ_k c_k P̃_k(x)` with `P̃_k` the unit-endpoint Legendre polynomials.
fn legendre_sum<T: Real>(c: &[T], x: T) -> T {
    let mut acc = c[0];
    if c.len() == 1 {
        return acc;
    }
    let (mut p0, mut p1) = (T::one(), x);
    acc += c[1] * x;
    for (k, &ck) in c.iter().enumerate().skip(2) {
        let n = T::from_usize_lossy(k - 1);
        let p2 = ((n + n + T::one()) * x * p1 - n * p0) / (n + T::one());
        acc += ck * p2;
        p0 = p1;
        p1 = p2;
    }
    acc
}

/// `Σ_n |∂ out / ∂ q_n|` at `x`, where `q_n ≈ x·P̃_n` is the product formed
/// at level `n`. The recurrence is linear in the carried values once `x` is
/// fixed, so product errors of size `η` move the output by at most `η` times
/// this sum.
fn product_sensitivity<T: Real>(c: &[T], x: T) -> T {
    let nmax = c.len() - 1;
    let mut lam = vec![T::zero(); nmax + 3];
    for k in (1..=nmax).rev() {
        let kf = T::from_usize_lossy(k);
        let mut v = c[k];
        if k < nmax {
            v += lam[k + 1] * (kf + kf + T::one()) * x / (kf + T::one());
        }
        if k + 1 < nmax {
            v -= lam[k + 2] * (kf + T::one()) / (kf + T::lit(2.0));
        }
        lam[k] = v;
    }
    (1..nmax)
        .map(|n| {
            let nf = T::from_usize_lossy(n);
            (lam[n + 1] * (nf + nf + T::one()) / (nf + T::one())).abs()
        })
        .sum()
}

/// Chain carrying `(x, P̃_{n−1}, P̃_n, partial sum)` through one product
/// per level; all other channels are exact identities.
fn series_chain<T: Real>(c: &[T], eta: f64) -> Result<Network<T>> {
    let nmax = c.len() - 1;
    let mut a = Mat::zeros(1, 1);
    a[(0, 0)] = if nmax >= 1 { c[1] } else { T::zero() };
    let affine = Network::affine(a, vec![c[0]])?;
    if nmax <= 1 {
        return Ok(affine);
    }
    // Values stay within [−1,1] up to the accumulated emulation error.
    let prod = product_net_raw::<T>(eta, 1.125)?;
    let lp = prod.depth();
    let id = identity_net::<T>(1, lp)?;
    let channels = [
        concat(&id, &selector(4, &[0]))?,
        concat(&id, &selector(4, &[1]))?,
        concat(&id, &selector(4, &[2]))?,
        concat(&prod, &selector(4, &[0, 2]))?,
        concat(&id, &selector(4, &[3]))?,
    ];
    let block = parallelize_all(&channels)?;
    let init_w = Mat::from_vec(4, 1, vec![T::one(), T::zero(), T::one(), c[1]])?;
    let mut net = Network::affine(init_w, vec![T::zero(), T::one(), T::zero(), c[0]])?;
    for n in 1..nmax {
        let nf = T::from_usize_lossy(n);
        let a_q = (nf + nf + T::one()) / (nf + T::one());
        let a_p = -nf / (nf + T::one());
        let cn = c[n + 1];
        // inputs (x, p_{n−1}, p_n, q_n, acc)
        let post = Mat::from_vec(
            4,
            5,
            vec![
                T::one(), T::zero(), T::zero(), T::zero(), T::zero(),
                T::zero(), T::zero(), T::one(), T::zero(), T::zero(),
                T::zero(), a_p, T::zero(), a_q, T::zero(),
                T::zero(), cn * a_p, T::zero(), cn * a_q, T::one(),
            ],
        )?;
        let step = concat(&Network::affine(post, vec![T::zero(); 4])?, &block)?;
        net = concat(&step, &net)?;
    }
    concat(&selector(4, &[3]), &net)
}

/// Network for `Σ_k c_k P̃_k` on `[−1,1]` with grid sup error at most `eps`
/// on 4097 Chebyshev nodes. The per-product accuracy is the error target
/// divided by the worst-case amplification of product errors through the
/// recurrence; it is halved (at most six times) if certification fails.
pub fn legendre_series_net<T: Real>(c: &[T], eps: f64) -> Result<Certified<T>> {
    if c.is_empty() {
        return invalid("empty coefficient list");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("epsilon must lie in (0,1), got {eps}"));
    }
    let grid = chebyshev_lobatto::<T>(4097);
    let exact: Vec<T> = grid.iter().map(|&x| legendre_sum(c, x)).collect();
    let amp = grid
        .iter()
        .map(|&x| product_sensitivity(c, x).to_f64_lossy())
        .fold(0.0, f64::max);
    let mut eta = if amp > 0.0 { (eps / (1.01 * amp)).min(0.5) } else { 0.5 };
    let mut last_err = f64::INFINITY;
    for _ in 0..7 {
        let net = series_chain(c, eta)?;
        let vals = net.realize_many(&grid)?;
        last_err = vals
            .iter()
            .zip(&exact)
            .map(|(a, b)| (*a - *b).abs().to_f64_lossy())
            .fold(0.0, f64::max);
        if last_err <= eps {
            return certify("Legendre series network", net, last_err, eps, grid.len());
        }
        eta *= 0.5;
    }
    Err(Error::CertificationFailed { what: "Legendre series network".into(), error: last_err, bound: eps })
}

/// Emulation of the normalized Legendre polynomial `P_k`; exact for `k ≤ 1`.
pub fn legendre_net<T: Real>(k: usize, eps: f64) -> Result<Certified<T>> {
    let mut c = vec![T::zero(); k + 1];
    c[k] = T::from_usize_lossy(2 * k + 1).sqrt();
    legendre_series_net(&c, eps)
}

/// Coefficients of `φ_{w,j}` against `P̃_k`, cut at `min(N★, last nonzero)`.
fn slepian_series<T: Real>(basis: &ProlateBasis1D<T>, j: usize, n_star: usize) -> Result<Vec<T>> {
    let beta = basis.coeffs(j)?;
    let last = beta.iter().rposition(|b| *b != T::zero()).unwrap_or(0);
    let top = last.min(n_star);
    Ok((0..=top).map(|k| beta[k] * T::from_usize_lossy(2 * k + 1).sqrt()).collect())
}

fn cross_n_star<T: Real>(basis: &ProlateBasis1D<T>, n: usize, eps: f64) -> Result<usize> {
    if n == 0 || n - 1 > basis.jmax() {
        return Err(Error::IndexOutOfRange { index: n.saturating_sub(1), max: basis.jmax() });
    }
    n_star_ln(basis.w().to_f64_lossy(), eps, basis.ln_mu()[n - 1].to_f64_lossy())
}

/// Coordinate network for `φ_{w,j}` on `[−1,1]`.
fn slepian_coordinate_net<T: Real>(basis: &ProlateBasis1D<T>, j: usize, n_star: usize, eps: f64) -> Result<Network<T>> {
    Ok(legendre_series_net(&slepian_series(basis, j, n_star)?, eps)?.net)
}

fn tensor_compose<T: Real>(coord: &[&Network<T>], n: usize, w: f64, eps: f64) -> Result<Network<T>> {
    let d = coord.len();
    let depth = coord.iter().map(|c| c.depth()).max().unwrap_or(1);
    let lifted: Vec<Network<T>> = coord
        .iter()
        .enumerate()
        .map(|(k, c)| concat(&pad_depth(c, depth)?, &selector(d, &[k])))
        .collect::<Result<_>>()?;
    let first = parallelize_all(&lifted)?;
    match d {
        1 => Ok(first),
        2 => {
            let p = product_net_raw::<T>(eps, m_dn(2, n, w)? as f64)?;
            concat(&p, &first)
        }
        3 => {
            let p2 = product_net_raw::<T>(eps, m_dn(2, n, w)? as f64)?;
            let p3 = product_net_raw::<T>(eps, m_dn(3, n, w)? as f64)?;
            let mid = parallelize(
                &concat(&p2, &selector(3, &[0, 1]))?,
                &concat(&identity_net(1, p2.depth())?, &selector(3, &[2]))?,
            )?;
            concat(&p3, &concat(&mid, &first)?)
        }
        _ => invalid("tensor networks are built for d <= 3"),
    }
}

fn certification_grid<T: Real>(d: usize) -> Vec<T> {
    let g = match d {
        1 => 4097,
        2 => 257,
        _ => 65,
    };
    let nodes = chebyshev_lobatto::<T>(g);
    (0..g.pow(d as u32)).flat_map(|f| grid_point(&nodes, d, f)).collect()
}

fn certify_slepian<T: Real>(
    basis: &ProlateBasis1D<T>,
    nu: &[usize],
    net: Network<T>,
    bound: f64,
) -> Result<Certified<T>> {
    let d = nu.len();
    let pts = certification_grid::<T>(d);
    let vals = net.realize_many(&pts)?;
    let err = vals
        .par_iter()
        .zip(pts.par_chunks(d))
        .map(|(v, y)| {
            let exact = nu
                .iter()
                .zip(y)
                .fold(T::one(), |acc, (&j, &x)| acc * basis.eval_unchecked(j, x));
            (*v - exact).abs().to_f64_lossy()
        })
        .reduce(|| 0.0, f64::max);
    certify("Slepian network", net, err, bound, pts.len() / d)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        invalid(format!("epsilon must lie in (0,1), got {eps}"))
    }
}

/// Network emulating `φ_{w,ν}` for `ν ∈ Λ` (hyperbolic cross of order `n`,
/// `d ≤ 3`), certified on a Chebyshev grid to `B(d,n)·ε`. Coordinate series
/// are cut at `N★(w, ε, μ_{w,n−1})`; coordinates are multiplied with product
/// networks on `[−M(d,n), M(d,n)]`.
pub fn slepian_net<T: Real>(basis: &ProlateBasis1D<T>, set: &IndexSet, nu: &[usize], eps: f64) -> Result<Certified<T>> {
    check_eps(eps)?;
    if !set.contains(nu) {
        return invalid(format!("multi-index {nu:?} is not in the index set"));
    }
    let w = basis.w().to_f64_lossy();
    let n = set.n();
    let ns = cross_n_star(basis, n, eps)?;
    let coord: Vec<Network<T>> = nu
        .iter()
        .map(|&j| slepian_coordinate_net(basis, j, ns, eps))
        .collect::<Result<_>>()?;
    let refs: Vec<&Network<T>> = coord.iter().collect();
    let net = tensor_compose(&refs, n, w, eps)?;
    certify_slepian(basis, nu, net, b_dn(set.d(), n, w)? as f64 * eps)
}

/// The class `N_{Λ,w,ε}`: fixed emulators `Ψ^ν` and a trainable linear head.
#[derive(Clone, Debug)]
pub struct SlepianNetClass<T> {
    pub basis: Arc<ProlateBasis1D<T>>,
    pub index_set: IndexSet,
    pub eps: f64,
    pub n_star: usize,
    pub nets: Vec<Network<T>>,
    pub certificates: Vec<Certificate>,
    pub head: Vec<Complex<T>>,
}

impl<T: Real> SlepianNetClass<T> {
    /// Builds and certifies `Ψ^ν` for every `ν` in the cross of order `n`,
    /// reusing coordinate networks across indices.
    pub fn build(w: T, d: usize, n: usize, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let set = IndexSet::hyperbolic_cross(d, n)?;
        let basis = Arc::new(ProlateBasis1D::new(w, set.max_component())?);
        let wf = w.to_f64_lossy();
        let ns = cross_n_star(&basis, n, eps)?;
        let coords: BTreeMap<usize, Network<T>> = (0..=set.max_component())
            .into_par_iter()
            .map(|j| slepian_coordinate_net(&basis, j, ns, eps).map(|net| (j, net)))
            .collect::<Result<_>>()?;
        let bound = b_dn(d, n, wf)? as f64 * eps;
        let built: Vec<Certified<T>> = set
            .iter()
            .map(|nu| {
                let refs: Vec<&Network<T>> = nu.iter().map(|j| &coords[j]).collect();
                let net = tensor_compose(&refs, n, wf, eps)?;
                certify_slepian(&basis, nu, net, bound)
            })
            .collect::<Result<_>>()?;
        let len = set.len();
        let (nets, certificates) = built.into_iter().map(|c| (c.net, c.certificate)).unzip();
        Ok(SlepianNetClass {
            basis,
            index_set: set,
            eps,
            n_star: ns,
            nets,
            certificates,
            head: vec![Complex::new(T::zero(), T::zero()); len],
        })
    }

    pub fn d(&self) -> usize {
        self.index_set.d()
    }

    pub fn n(&self) -> usize {
        self.index_set.n()
    }

    pub fn w(&self) -> T {
        self.basis.w()
    }

    /// `m × #Λ` matrix of `R(Ψ^ν)(y_j)`.
    pub fn feature_matrix(&self, points: &[T]) -> Result<Mat<T>> {
        let d = self.d();
        for &c in points {
            check_unit(c)?;
        }
        let m = points.len() / d;
        let cols: Vec<Vec<T>> = self.nets.par_iter().map(|n| n.realize_many(points)).collect::<Result<_>>()?;
        Ok(Mat::from_fn(m, self.nets.len(), |i, j| cols[j][i]))
    }

    /// `Σ_ν b_ν R(Ψ^ν)(y)` at each point.
    pub fn evaluate(&self, points: &[T]) -> Result<Vec<Complex<T>>> {
        Ok(complex_matvec(&self.feature_matrix(points)?, &self.head))
    }

    /// Total depth and size over all emulators.
    pub fn depth(&self) -> usize {
        self.nets.iter().map(Network::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        self.nets.iter().map(Network::size).sum::<usize>() + self.head.len()
    }

    fn exact_basis(&self) -> Result<TensorBasis<T>> {
        TensorBasis::new(Family1D::Slepian(self.basis.clone()), self.index_set.clone())
    }
}

/// Diagnostics of a last-layer fit.
#[derive(Clone, Debug, Serialize)]
pub struct PetReport {
    pub frobenius_gap: f64,
    pub gap_bound: f64,
    pub gap_holds: bool,
    pub sigma_min_exact: f64,
    pub sigma_min_net: f64,
    /// `σ_min(Ã) ≥ σ_min(A) − √#Λ·B(d,n)·ε`.
    pub weyl_holds: bool,
    pub eps_limit: f64,
}

/// Fits the head of the class by least squares on
/// `Ã_{j,ν} = R(Ψ^ν)(y_j)/√m`, after checking the admissibility of `ε`
/// for the given `δ`.
pub fn pet_fit<T: Real>(
    class: &SlepianNetClass<T>,
    samples: &SampleSet<T>,
    delta: f64,
) -> Result<(SlepianNetClass<T>, FitResult<T>, PetReport)> {
    let (d, n) = (class.d(), class.n());
    let w = class.w().to_f64_lossy();
    if samples.d != d {
        return Err(Error::DimensionMismatch { expected: d, got: samples.d });
    }
    let limit = eps_condition(d, n, w, delta)?;
    if class.eps > limit {
        return Err(Error::EpsCondition { eps: class.eps, limit });
    }
    let m = samples.m();
    if m < class.nets.len() {
        return Err(Error::Underdetermined { m, n: class.nets.len() });
    }
    let sm = T::from_usize_lossy(m).sqrt();
    let mut a_net = class.feature_matrix(&samples.points)?;
    for v in a_net.as_mut_slice() {
        *v /= sm;
    }
    let exact = class.exact_basis()?;
    let a = design_matrix(&exact, samples)?;
    let gap = a
        .as_slice()
        .iter()
        .zip(a_net.as_slice())
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<T>()
        .sqrt()
        .to_f64_lossy();
    let gap_bound = (class.nets.len() as f64).sqrt() * b_dn(d, n, w)? as f64 * class.eps;
    let sigma_exact = QrSvd::new(&a)?.sigma_min().to_f64_lossy();
    let mut descriptor = exact.descriptor();
    descriptor.family = "slepian_net".into();
    let fit = fit_matrix(&a_net, samples, descriptor)?;
    let sigma_net = fit.sigma_min.to_f64_lossy();
    let mut trained = class.clone();
    trained.head = fit.coefficients.clone();
    let report = PetReport {
        frobenius_gap: gap,
        gap_bound,
        gap_holds: gap <= gap_bound,
        sigma_min_exact: sigma_exact,
        sigma_min_net: sigma_net,
        weyl_holds: sigma_net >= sigma_exact - gap_bound,
        eps_limit: limit,
    };
    Ok((trained, fit, report))
}

/// `max_k L(legendre_net(k, ε)) / ((1 + log₂ k)(k + log₂(1/ε)))` over the
/// given degrees (`k ≥ 2`), reported as a growth constant.
pub fn legendre_depth_constant(ks: &[usize], eps: f64) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &k in ks.iter().filter(|&&k| k >= 2) {
        let depth = legendre_net::<f64>(k, eps)?.net.depth() as f64;
        let kf = k as f64;
        c = c.max(depth / ((1.0 + kf.log2()) * (kf + (1.0 / eps).log2())));
    }
    Ok(c)
}
