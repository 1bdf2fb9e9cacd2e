//! Trainable fully connected ReLU networks: initialization schemes, Adam
//! with exponential learning-rate decay, hand-written backpropagation and
//! the Slepian-based initialization.

use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Mat, QrSvd};
use crate::netcalc::{parallelize, Layer, Network};
use crate::prolate::ProlateBasis1D;
use crate::sampling::{derive_seed, draw_uniform, rmse_real, stream_rng, TargetFunction};
use crate::scalar::Real;
use crate::tensorbasis::chebyshev_lobatto;

/// Hyperparameters of the Slepian-based initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlepianInitConfig {
    pub w: f64,
    /// Number of subnetworks `J`, one per `φ_{w,j}`, `j < J`.
    pub count: usize,
    /// Hidden widths of each subnetwork, e.g. `[100, 100]`.
    pub subnet_hidden: Vec<usize>,
    pub subnet_epochs: usize,
    pub subnet_learning_rate: f64,
    pub subnet_batch_size: Option<usize>,
    pub subnet_decay_period: usize,
    /// Training points per subnetwork.
    pub fit_samples: usize,
    /// Fresh target samples for the least-squares head.
    pub head_samples: usize,
}

impl Default for SlepianInitConfig {
    fn default() -> Self {
        SlepianInitConfig {
            w: 18.0,
            count: 10,
            subnet_hidden: vec![100, 100],
            subnet_epochs: 1000,
            subnet_learning_rate: 1e-3,
            subnet_batch_size: None,
            subnet_decay_period: 1,
            fit_samples: 10_000,
            head_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitKind {
    /// i.i.d. `N(0, std²)` weights and biases.
    Normal { std: f64 },
    He,
    Glorot,
    Slepian(SlepianInitConfig),
}

impl Default for InitKind {
    fn default() -> Self {
        InitKind::Normal { std: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// `(d, n_1, …, n_L, out)`.
    pub architecture: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Learning rate is `lr·decay_rate^{⌊epoch/decay_period⌋}`.
    pub decay_rate: f64,
    pub decay_period: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub init: InitKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: vec![1, 10, 1],
            epochs: 100,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            decay_rate: 0.85,
            decay_period: 1,
            batch_size: None,
            seed: 0,
            init: InitKind::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.architecture.len() < 2 || self.architecture.contains(&0) {
            return invalid(format!("architecture needs at least two positive widths, got {:?}", self.architecture));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return invalid(format!("decay rate must lie in (0,1], got {}", self.decay_rate));
        }
        if self.decay_period == 0 {
            return invalid("decay period must be at least one epoch");
        }
        if !(self.learning_rate > 0.0) {
            return invalid("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return invalid("Adam parameters out of range");
        }
        if self.batch_size == Some(0) {
            return invalid("batch size must be positive");
        }
        Ok(())
    }

    fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay_rate.powi((epoch / self.decay_period) as i32)
    }
}

/// `(d, 10L, …, 10L, 1)` with `L` hidden layers.
pub fn architecture_from_ratio(d: usize, layers: usize) -> Result<Vec<usize>> {
    if layers == 0 || d == 0 {
        return invalid("depth and input dimension must be at least 1");
    }
    let mut a = vec![d];
    a.extend(std::iter::repeat_n(10 * layers, layers));
    a.push(1);
    Ok(a)
}

/// Random network for the normal, He and Glorot schemes.
pub fn init_weights<T: Real>(config: &TrainConfig) -> Result<Network<T>> {
    config.validate()?;
    let arch = &config.architecture;
    let mut rng = stream_rng(config.seed, 0);
    let mut layers = Vec::with_capacity(arch.len() - 1);
    for pair in arch.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let (weights, bias): (Vec<f64>, Vec<f64>) = match &config.init {
            InitKind::Normal { std } => {
                let n = Normal::new(0.0, *std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let w = (0..fan_in * fan_out).map(|_| n.sample(&mut rng)).collect();
                let b = (0..fan_out).map(|_| n.sample(&mut rng)).collect();
                (w, b)
            }
            InitKind::He => {
                let n = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                ((0..fan_in * fan_out).map(|_| n.sample(&mut rng)).collect(), vec![0.0; fan_out])
            }
            InitKind::Glorot => {
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let u = Uniform::new_inclusive(-a, a);
                ((0..fan_in * fan_out).map(|_| u.sample(&mut rng)).collect(), vec![0.0; fan_out])
            }
            InitKind::Slepian(_) => {
                return invalid("Slepian initialization needs a target; use slepian_initialization");
            }
        };
        let weights = Mat::from_vec(fan_out, fan_in, weights.into_iter().map(T::lit).collect())?;
        layers.push(Layer::new(weights, bias.into_iter().map(T::lit).collect())?);
    }
    Network::new(arch[0], layers)
}

/// Real regression data, points flattened row by row.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub d: usize,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(d: usize, x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if d == 0 || x.len() != d * y.len() {
            return Err(Error::DimensionMismatch { expected: d * y.len(), got: x.len() });
        }
        if y.is_empty() {
            return invalid("dataset is empty");
        }
        Ok(Dataset { d, x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Uniform draw labelled with the real part of `f`.
    pub fn from_target(f: &TargetFunction<T>, m: usize, seed: u64) -> Result<Self> {
        let d = f.dimension();
        let x = draw_uniform::<T>(d, m, seed)?;
        let y = f.evaluate_points(&x)?.into_iter().map(|z| z.re).collect();
        Self::new(d, x, y)
    }
}

/// Per-sample forward/backward buffers.
struct Workspace<T> {
    pre: Vec<Vec<T>>,
    act: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
    offsets: Vec<usize>,
}

impl<T: Real> Workspace<T> {
    fn new(net: &Network<T>) -> Self {
        let widths = net.widths();
        Workspace {
            pre: widths[1..].iter().map(|&w| vec![T::zero(); w]).collect(),
            act: widths.iter().map(|&w| vec![T::zero(); w]).collect(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
            offsets: param_offsets(net),
        }
    }

    fn forward(&mut self, net: &Network<T>, x: &[T]) {
        self.act[0].copy_from_slice(x);
        let last = net.depth() - 1;
        for (l, layer) in net.layers().iter().enumerate() {
            let (lo, hi) = self.act.split_at_mut(l + 1);
            let input = &lo[l];
            let z = &mut self.pre[l];
            let a = &mut hi[0];
            let cols = layer.weights.cols();
            let wdata = layer.weights.as_slice();
            for i in 0..z.len() {
                let row = &wdata[i * cols..(i + 1) * cols];
                let mut s = layer.bias[i];
                for (wv, xv) in row.iter().zip(input.iter()) {
                    s += *wv * *xv;
                }
                z[i] = s;
                a[i] = if l < last && s < T::zero() { T::zero() } else { s };
            }
        }
    }

    /// Accumulates `∂/∂θ` of `scale·|out − y|²` into `grad` (layout of
    /// [`flatten_params`]); returns the squared error.
    fn backward(&mut self, net: &Network<T>, y: &[T], scale: T, grad: &mut [T]) -> T {
        let depth = net.depth();
        let out = &self.act[depth];
        self.delta.clear();
        let mut sq = T::zero();
        for (o, t) in out.iter().zip(y) {
            let r = *o - *t;
            sq += r * r;
            self.delta.push((r + r) * scale);
        }
        for l in (0..depth).rev() {
            let layer = &net.layers()[l];
            let cols = layer.weights.cols();
            let input = &self.act[l];
            let off = self.offsets[l];
            let (gw, rest) = grad[off..].split_at_mut(layer.weights.rows() * cols);
            for (i, &dl) in self.delta.iter().enumerate() {
                if dl == T::zero() {
                    continue;
                }
                for (g, xv) in gw[i * cols..(i + 1) * cols].iter_mut().zip(input) {
                    *g += dl * *xv;
                }
                rest[i] += dl;
            }
            if l > 0 {
                let zprev = &self.pre[l - 1];
                self.delta_prev.clear();
                self.delta_prev.resize(cols, T::zero());
                let wdata = layer.weights.as_slice();
                for (i, &dl) in self.delta.iter().enumerate() {
                    if dl == T::zero() {
                        continue;
                    }
                    for (dp, wv) in self.delta_prev.iter_mut().zip(&wdata[i * cols..(i + 1) * cols]) {
                        *dp += dl * *wv;
                    }
                }
                for (dp, z) in self.delta_prev.iter_mut().zip(zprev) {
                    if *z <= T::zero() {
                        *dp = T::zero();
                    }
                }
                std::mem::swap(&mut self.delta, &mut self.delta_prev);
            }
        }
        sq
    }
}

fn param_offsets<T: Real>(net: &Network<T>) -> Vec<usize> {
    let mut off = Vec::with_capacity(net.depth());
    let mut acc = 0;
    for l in net.layers() {
        off.push(acc);
        acc += l.weights.rows() * (l.weights.cols() + 1);
    }
    off
}

/// All parameters, per layer: weights row-major then biases.
pub fn flatten_params<T: Real>(net: &Network<T>) -> Vec<T> {
    let mut v = Vec::with_capacity(net.num_params());
    for l in net.layers() {
        v.extend_from_slice(l.weights.as_slice());
        v.extend_from_slice(&l.bias);
    }
    v
}

pub fn set_params<T: Real>(net: &mut Network<T>, params: &[T]) -> Result<()> {
    if params.len() != net.num_params() {
        return Err(Error::DimensionMismatch { expected: net.num_params(), got: params.len() });
    }
    let mut k = 0;
    for l in net.layers_mut() {
        let nw = l.weights.as_slice().len();
        l.weights.as_mut_slice().copy_from_slice(&params[k..k + nw]);
        k += nw;
        let nb = l.bias.len();
        l.bias.copy_from_slice(&params[k..k + nb]);
        k += nb;
    }
    Ok(())
}

/// Mean squared error over the dataset.
pub fn mse<T: Real>(net: &Network<T>, data: &Dataset<T>) -> Result<T> {
    if net.input_dim() != data.d || net.output_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: data.d, got: net.input_dim() });
    }
    let mut ws = Workspace::new(net);
    let mut s = T::zero();
    for (x, y) in data.x.chunks(data.d).zip(&data.y) {
        ws.forward(net, x);
        let r = ws.act[net.depth()][0] - *y;
        s += r * r;
    }
    Ok(s / T::from_usize_lossy(data.len()))
}

/// Mean squared error and its gradient with respect to [`flatten_params`].
pub fn loss_and_gradient<T: Real>(net: &Network<T>, data: &Dataset<T>) -> Result<(T, Vec<T>)> {
    if net.input_dim() != data.d || net.output_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: data.d, got: net.input_dim() });
    }
    let mut grad = vec![T::zero(); net.num_params()];
    let mut ws = Workspace::new(net);
    let scale = T::one() / T::from_usize_lossy(data.len());
    let mut s = T::zero();
    for (x, y) in data.x.chunks(data.d).zip(&data.y) {
        ws.forward(net, x);
        s += ws.backward(net, std::slice::from_ref(y), scale, &mut grad);
    }
    Ok((s * scale, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_mse: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub net: Network<T>,
    pub trace: Vec<EpochLoss>,
}

/// CSV with columns `epoch,train_mse,test_mse` (empty when absent).
pub fn write_trace_csv<W: Write>(trace: &[EpochLoss], mut w: W) -> Result<()> {
    writeln!(w, "epoch,train_mse,test_mse")?;
    for e in trace {
        match e.test_mse {
            Some(t) => writeln!(w, "{},{:e},{:e}", e.epoch, e.train_mse, t)?,
            None => writeln!(w, "{},{:e},", e.epoch, e.train_mse)?,
        }
    }
    Ok(())
}

/// Adam on the mean squared error. Mini-batches (if any) are reshuffled
/// every epoch from the configured seed. The trace holds the full-data
/// losses after each epoch.
pub fn train<T: Real>(
    net: &Network<T>,
    data: &Dataset<T>,
    test: Option<&Dataset<T>>,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if net.input_dim() != data.d || net.output_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: data.d, got: net.input_dim() });
    }
    let mut net = net.clone();
    let np = net.num_params();
    let mut params = flatten_params(&net);
    let mut m1 = vec![T::zero(); np];
    let mut m2 = vec![T::zero(); np];
    let mut grad = vec![T::zero(); np];
    let mut ws = Workspace::new(&net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = stream_rng(derive_seed(config.seed, 0x7368_7566), 0);
    let batch = config.batch_size.unwrap_or(data.len()).min(data.len());
    let (b1, b2) = (T::lit(config.beta1), T::lit(config.beta2));
    let eps = T::lit(config.adam_eps);
    let mut step = 0i32;
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if batch < data.len() {
            order.shuffle(&mut rng);
        }
        let lr = T::lit(config.learning_rate_at(epoch));
        for idx in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            let scale = T::one() / T::from_usize_lossy(idx.len());
            for &i in idx {
                ws.forward(&net, &data.x[i * data.d..(i + 1) * data.d]);
                ws.backward(&net, std::slice::from_ref(&data.y[i]), scale, &mut grad);
            }
            step += 1;
            let c1 = T::one() - b1.powi(step);
            let c2 = T::one() - b2.powi(step);
            for k in 0..np {
                let g = grad[k];
                m1[k] = b1 * m1[k] + (T::one() - b1) * g;
                m2[k] = b2 * m2[k] + (T::one() - b2) * g * g;
                params[k] -= lr * (m1[k] / c1) / ((m2[k] / c2).sqrt() + eps);
            }
            set_params(&mut net, &params)?;
        }
        let train_mse = mse(&net, data)?.to_f64_lossy();
        if !train_mse.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let test_mse = test.map(|t| mse(&net, t)).transpose()?.map(|v| v.to_f64_lossy());
        trace.push(EpochLoss { epoch, train_mse, test_mse });
    }
    Ok(TrainOutcome { net, trace })
}

/// Result of the Slepian-based initialization.
#[derive(Clone, Debug)]
pub struct SlepianInitOutcome<T> {
    pub net: Network<T>,
    pub subnets: Vec<Network<T>>,
    /// Test RMSE of each subnetwork against `φ_{w,j}` (1000 fresh points).
    pub subnet_test_rmse: Vec<f64>,
    pub head: Vec<T>,
    /// Constant added before the ReLU of the tap layer, per subnetwork.
    pub tap_shift: Vec<T>,
}

/// Trains one subnetwork per `φ_{w,j}`, fits the head `α` by least squares
/// on fresh target samples and assembles `(1, ΣN₁, ΣN₂, J, 1)`: the
/// subnetworks run in parallel, the tap layer holds `φ̃_j + s_j` (shifted so
/// the ReLU is inactive on [-1, 1]) and the last layer is the head.
pub fn slepian_initialization<T: Real>(
    target: &TargetFunction<T>,
    cfg: &SlepianInitConfig,
    seed: u64,
) -> Result<SlepianInitOutcome<T>> {
    if target.dimension() != 1 {
        return invalid("Slepian initialization is implemented for one-dimensional targets");
    }
    if cfg.count == 0 || cfg.subnet_hidden.is_empty() {
        return invalid("need at least one subnetwork with at least one hidden layer");
    }
    let basis = Arc::new(ProlateBasis1D::<T>::new(T::lit(cfg.w), cfg.count - 1)?);
    let mut arch = vec![1];
    arch.extend_from_slice(&cfg.subnet_hidden);
    arch.push(1);
    let trained: Vec<(Network<T>, f64)> = (0..cfg.count)
        .into_par_iter()
        .map(|j| {
            let f = TargetFunction::BasisElement { basis: basis.clone(), nu: vec![j] };
            let sub_seed = derive_seed(seed, 1000 + j as u64);
            let data = Dataset::from_target(&f, cfg.fit_samples, sub_seed)?;
            let tc = TrainConfig {
                architecture: arch.clone(),
                epochs: cfg.subnet_epochs,
                learning_rate: cfg.subnet_learning_rate,
                batch_size: cfg.subnet_batch_size,
                decay_period: cfg.subnet_decay_period,
                seed: sub_seed,
                init: InitKind::He,
                ..TrainConfig::default()
            };
            let net0 = init_weights::<T>(&tc)?;
            let out = train(&net0, &data, None, &tc)?;
            let test = Dataset::from_target(&f, 1000, derive_seed(sub_seed, 7))?;
            let pred = out.net.realize_many(&test.x)?;
            let r = rmse_real(&test.y, &pred)?.to_f64_lossy();
            Ok((out.net, r))
        })
        .collect::<Result<_>>()?;
    let (subnets, subnet_test_rmse): (Vec<Network<T>>, Vec<f64>) = trained.into_iter().unzip();

    let head_data = Dataset::from_target(target, cfg.head_samples, derive_seed(seed, 0x6865_6164))?;
    let cols: Vec<Vec<T>> = subnets.iter().map(|s| s.realize_many(&head_data.x)).collect::<Result<_>>()?;
    let m = head_data.len();
    let a = Mat::from_fn(m, cfg.count, |i, j| cols[j][i]);
    let head = QrSvd::new(&a)?.solve(&head_data.y)?;

    let grid = chebyshev_lobatto::<T>(4097);
    let tap_shift: Vec<T> = subnets
        .iter()
        .map(|s| {
            let v = s.realize_many(&grid)?;
            Ok(v.iter().fold(T::zero(), |acc, x| acc.max(-*x)) + T::one())
        })
        .collect::<Result<_>>()?;

    let mut p = subnets[0].clone();
    for s in &subnets[1..] {
        p = parallelize(&p, s)?;
    }
    let mut layers = p.layers().to_vec();
    let tap = layers.last_mut().expect("nonempty network");
    for (b, s) in tap.bias.iter_mut().zip(&tap_shift) {
        *b += *s;
    }
    let shift_total: T = head.iter().zip(&tap_shift).map(|(a, s)| *a * *s).sum();
    layers.push(Layer::new(Mat::from_vec(1, cfg.count, head.clone())?, vec![-shift_total])?);
    let net = Network::new(1, layers)?;
    Ok(SlepianInitOutcome { net, subnets, subnet_test_rmse, head, tap_shift })
}

/// Random perturbation helper for property tests: a network of the given
/// architecture with entries uniform in `[−scale, scale]`.
pub fn random_network<T: Real>(arch: &[usize], scale: f64, seed: u64) -> Result<Network<T>> {
    if arch.len() < 2 {
        return invalid("architecture needs at least two widths");
    }
    let mut rng = stream_rng(seed, 0);
    let mut layers = Vec::new();
    for p in arch.windows(2) {
        let w: Vec<T> = (0..p[0] * p[1]).map(|_| T::lit(rng.gen_range(-scale..=scale))).collect();
        let b: Vec<T> = (0..p[1]).map(|_| T::lit(rng.gen_range(-scale..=scale))).collect();
        layers.push(Layer::new(Mat::from_vec(p[1], p[0], w)?, b)?);
    }
    Network::new(arch[0], layers)
}
