//! Canned configurations for the published figures, at desk or full scale.
//!
//! Desk scale keeps each figure to a few minutes on one core: fewer trials,
//! m-grids capped at 1000–5000, and smaller networks and epoch counts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slepian_core::nettrain::{InitKind, SlepianInitConfig, TrainConfig};
use slepian_core::{Error, Result};

use crate::config::{ArchitectureRule, BasisKind, ExperimentConfig, Method, NoiseKind};
use crate::runner::{median, median_test_rmse, run_experiment, write_csv, ResultRow};

pub const FIGURES: [&str; 6] = ["bases-1d-g1", "bases-1d-g2", "bases-2d-g3", "init-compare", "ls-vs-dl-1d", "ls-vs-dl-2d"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::InvalidParameter(format!("unknown scale '{s}' (desk or paper)"))),
        }
    }
}

/// `k` log-spaced integers from `lo` to `hi` inclusive, deduplicated.
pub fn log_grid(lo: usize, hi: usize, k: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<usize> = (0..k)
        .map(|i| {
            let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
            (a + t * (b - a)).exp().round() as usize
        })
        .collect();
    v.dedup();
    v
}

fn base(id: &str, function: &str, method: Method, d: usize, w: f64) -> ExperimentConfig {
    ExperimentConfig {
        id: id.into(),
        function: function.into(),
        method,
        basis: BasisKind::Slepian,
        d,
        w,
        n_grid: vec![1],
        m_grid: vec![1],
        trials: 1,
        seed: 20240501,
        noise_kind: NoiseKind::None,
        noise_level: 0.0,
        test_ratio: 0.2,
        test_size: None,
        nn: None,
        architecture_rule: ArchitectureRule::Ratio,
        eps: None,
        delta: 0.5,
        output: None,
        record_runtime: false,
    }
}

fn bases_configs(id: &str, function: &str, d: usize, w: f64, n: usize, m_grid: Vec<usize>, trials: usize) -> Vec<ExperimentConfig> {
    [BasisKind::Slepian, BasisKind::Legendre, BasisKind::Chebyshev]
        .into_iter()
        .map(|b| {
            let mut c = base(id, function, Method::Ls, d, w);
            c.basis = b;
            c.n_grid = vec![n];
            c.m_grid = m_grid.clone();
            c.trials = trials;
            c.test_size = Some(1000);
            c
        })
        .collect()
}

fn nn_ratio_config(id: &str, function: &str, d: usize, layers: Vec<usize>, m: Vec<usize>, trials: usize, epochs: usize) -> ExperimentConfig {
    let mut c = base(id, function, Method::Nn, d, 1.0);
    c.n_grid = layers;
    c.m_grid = m;
    c.trials = trials;
    c.nn = Some(TrainConfig {
        architecture: vec![d, 10, 1],
        epochs,
        learning_rate: 1e-3,
        batch_size: Some(64),
        decay_period: 10,
        init: InitKind::He,
        ..TrainConfig::default()
    });
    c
}

/// The experiment configurations making up one figure.
pub fn figure_configs(name: &str, scale: Scale) -> Result<Vec<ExperimentConfig>> {
    let desk = scale == Scale::Desk;
    let trials = if desk { 5 } else { 20 };
    let m_grid = if desk { log_grid(10, 1000, 12) } else { log_grid(10, 10_000, 12) };
    Ok(match name {
        "bases-1d-g1" => bases_configs(name, "g1", 1, 10.0, 10, m_grid, trials),
        "bases-1d-g2" => bases_configs(name, "g2", 1, 13.0, 12, m_grid, trials),
        "bases-2d-g3" => {
            let grid = if desk { log_grid(20, 2000, 12) } else { log_grid(10, 10_000, 12) };
            bases_configs(name, "g3", 2, 10.0, 20, grid, trials)
        }
        "init-compare" => {
            let (count, hidden, sub_epochs, samples, w) =
                if desk { (12, 32, 200, 2000, 18.0) } else { (10, 100, 1000, 10_000, 16.0) };
            let arch = vec![1, hidden * count, hidden * count, count, 1];
            let slep = SlepianInitConfig {
                w,
                count,
                subnet_hidden: vec![hidden, hidden],
                subnet_epochs: sub_epochs,
                subnet_learning_rate: 5e-3,
                subnet_batch_size: Some(32),
                subnet_decay_period: 15,
                fit_samples: samples,
                head_samples: samples,
            };
            let inits = [InitKind::Slepian(slep), InitKind::Normal { std: 0.1 }, InitKind::He, InitKind::Glorot];
            inits
                .into_iter()
                .map(|init| {
                    let mut c = base(name, "f1", Method::Nn, 1, w);
                    c.architecture_rule = ArchitectureRule::Fixed;
                    c.n_grid = vec![arch.len() - 2];
                    c.m_grid = vec![samples];
                    c.trials = if desk { 5 } else { 10 };
                    c.test_size = Some(1000);
                    c.nn = Some(TrainConfig {
                        architecture: arch.clone(),
                        epochs: if desk { 30 } else { 1000 },
                        learning_rate: 1e-4,
                        batch_size: Some(32),
                        decay_period: 15,
                        init,
                        ..TrainConfig::default()
                    });
                    c
                })
                .collect()
        }
        "ls-vs-dl-1d" => {
            let mut ls = base(name, "f1", Method::Ls, 1, 16.0);
            ls.n_grid = vec![11, 16, 21, 26, 31];
            ls.m_grid = if desk { vec![5000] } else { log_grid(10, 10_000, 12) };
            ls.trials = trials;
            let nn = nn_ratio_config(
                name,
                "f1",
                1,
                if desk { vec![1, 2, 3, 4] } else { (1..=10).collect() },
                ls.m_grid.clone(),
                if desk { 5 } else { 20 },
                if desk { 100 } else { 1000 },
            );
            vec![ls, nn]
        }
        "ls-vs-dl-2d" => {
            let mut ls = base(name, "f2", Method::Ls, 2, 10.0);
            ls.n_grid = vec![10, 20, 40];
            ls.m_grid = if desk { vec![2000] } else { log_grid(100, 10_000, 12) };
            ls.trials = trials;
            let nn = nn_ratio_config(
                name,
                "f2",
                2,
                if desk { vec![1, 2, 3] } else { (1..=10).collect() },
                ls.m_grid.clone(),
                if desk { 5 } else { 20 },
                if desk { 100 } else { 1000 },
            );
            vec![ls, nn]
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown figure '{other}'; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    })
}

#[derive(Clone, Debug)]
pub struct FigureResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<String>,
    /// Median test RMSE per `(basis, n, m)`.
    pub medians: BTreeMap<(String, usize, usize), f64>,
}

/// Best (smallest) median test RMSE among rows with the given method.
pub fn best_median(rows: &[ResultRow], method: &str) -> f64 {
    let sel: Vec<ResultRow> = rows.iter().filter(|r| r.method == method).cloned().collect();
    median_test_rmse(&sel).values().copied().fold(f64::INFINITY, f64::min)
}

fn summarize(name: &str, rows: &[ResultRow], medians: &BTreeMap<(String, usize, usize), f64>) -> Vec<String> {
    let mut out: Vec<String> = medians
        .iter()
        .map(|((b, n, m), v)| format!("{name} basis={b} n={n} m={m} median_rmse_test={v:e}"))
        .collect();
    match name {
        "bases-1d-g1" | "bases-1d-g2" | "bases-2d-g3" => {
            for ((b, n, m), v) in medians.iter().filter(|((b, _, _), _)| b == "slepian") {
                let _ = b;
                if let Some(l) = medians.get(&("legendre".to_string(), *n, *m)) {
                    out.push(format!("{name} ratio slepian/legendre n={n} m={m}: {:e}", v / l));
                }
            }
        }
        "init-compare" => {
            let get = |b: &str| medians.iter().find(|((k, _, _), _)| k == b).map(|(_, v)| *v);
            if let (Some(s), Some(nm)) = (get("relu_slepian"), get("relu_normal")) {
                out.push(format!("{name} gap normal/slepian: {:e}", nm / s));
            }
        }
        _ => {
            let ls = best_median(rows, "ls");
            let nn = best_median(rows, "nn");
            out.push(format!("{name} best ls {ls:e}, best nn {nn:e}, gap nn/ls {:e}", nn / ls));
        }
    }
    out
}

/// Runs the canned configuration of a figure; writes `<name>.csv` and
/// `<name>.summary.txt` under `out_dir` when given.
pub fn reproduce_figure(name: &str, scale: Scale, out_dir: Option<&Path>, workers: Option<usize>) -> Result<FigureResult> {
    let configs = figure_configs(name, scale)?;
    let mut rows = Vec::new();
    for c in &configs {
        rows.extend(run_experiment(c, workers)?);
    }
    let medians = median_test_rmse(&rows);
    let summary = summarize(name, &rows, &medians);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_csv(&rows, std::fs::File::create(dir.join(format!("{name}.csv")))?)?;
        std::fs::write(dir.join(format!("{name}.summary.txt")), summary.join("\n") + "\n")?;
    }
    Ok(FigureResult { rows, summary, medians })
}

/// Median over trials of `rmse_test` for one basis label at `(n, m)`.
pub fn median_at(rows: &[ResultRow], basis: &str, n: usize, m: usize) -> f64 {
    median(
        rows.iter()
            .filter(|r| r.basis == basis && r.n == n && r.m == m)
            .filter_map(|r| r.rmse_test)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let g = log_grid(10, 1000, 12);
        assert_eq!(g.len(), 12);
        assert_eq!((g[0], g[11]), (10, 1000));
        assert_eq!(log_grid(10, 10_000, 12).last(), Some(&10_000));
    }

    #[test]
    fn every_figure_has_valid_configs() {
        for name in FIGURES {
            for scale in [Scale::Desk, Scale::Paper] {
                for c in figure_configs(name, scale).unwrap() {
                    c.validate().unwrap();
                }
            }
        }
        assert!(figure_configs("nope", Scale::Desk).is_err());
    }
}
