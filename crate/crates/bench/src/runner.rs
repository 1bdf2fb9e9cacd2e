//! Full-factorial experiment runner producing one CSV row per
//! `(n, m, trial)` cell.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use slepian_core::lstsq::fit_with_test;
use slepian_core::netcalc::{pet_fit, SlepianNetClass};
use slepian_core::nettrain::{
    architecture_from_ratio, init_weights, mse, slepian_initialization, train, Dataset, InitKind, TrainConfig,
};
use slepian_core::sampling::{derive_seed, make_test_set, make_training_set, rmse, TargetFunction};
use slepian_core::tensorbasis::TensorBasis;
use slepian_core::{Error, PolyFamily, Result};

use crate::config::{ArchitectureRule, BasisKind, ExperimentConfig, Method};

pub const CSV_HEADER: &str =
    "experiment_id,method,basis,d,w,n,num_params,m,trial,seed,rmse_train,rmse_test,sigma_min,runtime_ms,status";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment_id: String,
    pub method: String,
    pub basis: String,
    pub d: usize,
    pub w: f64,
    pub n: usize,
    pub num_params: usize,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub rmse_train: Option<f64>,
    pub rmse_test: Option<f64>,
    /// `-1` for trained networks.
    pub sigma_min: f64,
    pub runtime_ms: Option<u128>,
    pub status: String,
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:e},{},{}",
            self.experiment_id,
            self.method,
            self.basis,
            self.d,
            self.w,
            self.n,
            self.num_params,
            self.m,
            self.trial,
            self.seed,
            opt(self.rmse_train),
            opt(self.rmse_test),
            self.sigma_min,
            self.runtime_ms.map(|t| t.to_string()).unwrap_or_default(),
            self.status
        )
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv_line())?;
    }
    Ok(())
}

/// Seed of one trial; independent of `n`, so every `n` sees the same data.
pub fn trial_seed(master: u64, m: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, m as u64), trial as u64)
}

/// Thread count from `SLEPIAN_THREADS`, if set.
pub fn default_workers() -> Option<usize> {
    std::env::var("SLEPIAN_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&k| k > 0)
}

enum Prepared {
    Ls(TensorBasis<f64>),
    Pet(Box<std::result::Result<SlepianNetClass<f64>, String>>),
    Nn,
}

fn prepare(cfg: &ExperimentConfig, n: usize) -> Result<Prepared> {
    Ok(match cfg.method {
        Method::Ls => Prepared::Ls(match cfg.basis {
            BasisKind::Slepian => TensorBasis::slepian_cross(cfg.w, cfg.d, n)?,
            BasisKind::Legendre => TensorBasis::polynomial_cross(PolyFamily::LegendreNormalized, cfg.d, n)?,
            BasisKind::Chebyshev => TensorBasis::polynomial_cross(PolyFamily::ChebyshevFirstKind, cfg.d, n)?,
        }),
        Method::Pet => {
            let eps = cfg.eps.expect("validated");
            Prepared::Pet(Box::new(SlepianNetClass::build(cfg.w, cfg.d, n, eps).map_err(|e| e.to_string())))
        }
        Method::Nn => Prepared::Nn,
    })
}

fn init_name(init: &InitKind) -> &'static str {
    match init {
        InitKind::Normal { .. } => "relu_normal",
        InitKind::He => "relu_he",
        InitKind::Glorot => "relu_glorot",
        InitKind::Slepian(_) => "relu_slepian",
    }
}

fn status_of(e: &Error) -> String {
    match e {
        Error::DegenerateFit { .. } => "degenerate".into(),
        Error::Underdetermined { .. } => "skipped".into(),
        Error::EpsCondition { .. } => "eps_condition".into(),
        Error::NonFiniteLoss { .. } => "diverged".into(),
        Error::CertificationFailed { .. } => "certification_failed".into(),
        _ => "error".into(),
    }
}

fn run_cell(cfg: &ExperimentConfig, f: &TargetFunction<f64>, prep: &Prepared, n: usize, m: usize, trial: usize) -> ResultRow {
    let seed = trial_seed(cfg.seed, m, trial);
    let basis_label = match (&cfg.method, &cfg.nn) {
        (Method::Nn, Some(nn)) => init_name(&nn.init).to_string(),
        (Method::Pet, _) => "slepian_net".to_string(),
        _ => cfg.basis.as_str().to_string(),
    };
    let mut row = ResultRow {
        experiment_id: cfg.id.clone(),
        method: cfg.method.as_str().into(),
        basis: basis_label,
        d: cfg.d,
        w: cfg.w,
        n,
        num_params: 0,
        m,
        trial,
        seed,
        rmse_train: None,
        rmse_test: None,
        sigma_min: -1.0,
        runtime_ms: None,
        status: "ok".into(),
    };
    let start = Instant::now();
    let outcome = match prep {
        Prepared::Ls(basis) => {
            row.num_params = basis.len();
            if m < basis.len() {
                row.status = "skipped".into();
                return row;
            }
            run_ls(cfg, f, basis, m, seed, &mut row)
        }
        Prepared::Pet(class) => match class.as_ref() {
            Ok(class) => {
                row.num_params = class.nets.len();
                if m < class.nets.len() {
                    row.status = "skipped".into();
                    return row;
                }
                run_pet(cfg, f, class, m, seed, &mut row)
            }
            Err(msg) => Err(Error::CertificationFailed { what: msg.clone(), error: f64::NAN, bound: f64::NAN }),
        },
        Prepared::Nn => run_nn(cfg, f, n, m, seed, &mut row),
    };
    if let Err(e) = outcome {
        row.status = status_of(&e);
    }
    if cfg.record_runtime {
        row.runtime_ms = Some(start.elapsed().as_millis());
    }
    row
}

fn run_ls(
    cfg: &ExperimentConfig,
    f: &TargetFunction<f64>,
    basis: &TensorBasis<f64>,
    m: usize,
    seed: u64,
    row: &mut ResultRow,
) -> Result<()> {
    let train_set = make_training_set(f, cfg.d, m, seed, &cfg.noise_spec())?;
    let test_set = make_test_set(f, cfg.d, m, cfg.test_rule(), seed)?;
    let fit = fit_with_test(basis, &train_set, &test_set)?;
    row.rmse_train = Some(fit.rmse_train);
    row.rmse_test = fit.rmse_test;
    row.sigma_min = fit.sigma_min;
    Ok(())
}

fn run_pet(
    cfg: &ExperimentConfig,
    f: &TargetFunction<f64>,
    class: &SlepianNetClass<f64>,
    m: usize,
    seed: u64,
    row: &mut ResultRow,
) -> Result<()> {
    let train_set = make_training_set(f, cfg.d, m, seed, &cfg.noise_spec())?;
    let test_set = make_test_set(f, cfg.d, m, cfg.test_rule(), seed)?;
    let (trained, fit, _) = pet_fit(class, &train_set, cfg.delta)?;
    let pred = trained.evaluate(&test_set.points)?;
    row.rmse_train = Some(fit.rmse_train);
    row.rmse_test = Some(rmse(&test_set.values, &pred)?);
    row.sigma_min = fit.sigma_min;
    Ok(())
}

fn run_nn(cfg: &ExperimentConfig, f: &TargetFunction<f64>, n: usize, m: usize, seed: u64, row: &mut ResultRow) -> Result<()> {
    let mut tc: TrainConfig = cfg.nn.clone().expect("validated");
    if cfg.architecture_rule == ArchitectureRule::Ratio {
        tc.architecture = architecture_from_ratio(cfg.d, n)?;
    }
    tc.seed = seed;
    let train_set = make_training_set(f, cfg.d, m, seed, &cfg.noise_spec())?;
    let test_set = make_test_set(f, cfg.d, m, cfg.test_rule(), seed)?;
    let real = |s: &slepian_core::sampling::SampleSet<f64>| {
        Dataset::new(s.d, s.points.clone(), s.values.iter().map(|z| z.re).collect())
    };
    let (train_data, test_data) = (real(&train_set)?, real(&test_set)?);
    let net0 = match &tc.init {
        InitKind::Slepian(sc) => slepian_initialization(f, sc, seed)?.net,
        _ => init_weights::<f64>(&tc)?,
    };
    row.num_params = net0.num_params();
    let out = train(&net0, &train_data, None, &tc)?;
    row.rmse_train = Some(mse(&out.net, &train_data)?.sqrt());
    row.rmse_test = Some(mse(&out.net, &test_data)?.sqrt());
    Ok(())
}

/// Runs every cell of the configuration on `workers` threads (default:
/// `SLEPIAN_THREADS`, else all cores). Rows come back sorted by
/// `(n, m, trial)`; their content does not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let f = TargetFunction::<f64>::from_name(&cfg.function)?;
    if f.dimension() != cfg.d {
        return Err(Error::DimensionMismatch { expected: f.dimension(), got: cfg.d });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers.or_else(default_workers) {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(|| {
        let mut ns = cfg.n_grid.clone();
        ns.sort_unstable();
        ns.dedup();
        let prepared: BTreeMap<usize, Prepared> =
            ns.iter().map(|&n| Ok((n, prepare(cfg, n)?))).collect::<Result<_>>()?;
        let mut ms = cfg.m_grid.clone();
        ms.sort_unstable();
        ms.dedup();
        let cells: Vec<(usize, usize, usize)> = ns
            .iter()
            .flat_map(|&n| ms.iter().flat_map(move |&m| (0..cfg.trials).map(move |t| (n, m, t))))
            .collect();
        let mut rows: Vec<ResultRow> = cells
            .par_iter()
            .map(|&(n, m, t)| run_cell(cfg, &f, &prepared[&n], n, m, t))
            .collect();
        rows.sort_by_key(|r| (r.n, r.m, r.trial));
        Ok(rows)
    })
}

/// Median of the finite test errors per `(basis, n, m)`.
pub fn median_test_rmse(rows: &[ResultRow]) -> BTreeMap<(String, usize, usize), f64> {
    let mut groups: BTreeMap<(String, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = r.rmse_test.filter(|v| v.is_finite()) {
            groups.entry((r.basis.clone(), r.n, r.m)).or_default().push(v);
        }
    }
    groups.into_iter().map(|(k, v)| (k, median(v))).collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}
