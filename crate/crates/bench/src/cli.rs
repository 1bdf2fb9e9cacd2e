//! Command-line front end. Exit codes: 0 success, 1 failed assertion or
//! computation, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use slepian_core::bounds::verify_suite;
use slepian_core::indexset::IndexSet;
use slepian_core::lstsq::fit_with_test;
use slepian_core::netcalc::{slepian_net, Network};
use slepian_core::nettrain::{
    init_weights, mse, slepian_initialization, train, write_trace_csv, Dataset, InitKind, TrainConfig,
};
use slepian_core::prolate::ProlateBasis1D;
use slepian_core::sampling::{make_test_set, make_training_set, NoiseSpec, TargetFunction, TestSize};
use slepian_core::tensorbasis::TensorBasis;
use slepian_core::{Error, PolyFamily};

use crate::config::ExperimentConfig;
use crate::figures::{reproduce_figure, Scale};
use crate::runner::{run_experiment, write_csv};

#[derive(Parser, Debug)]
#[command(name = "slepian", version, about = "Slepian-basis approximation toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Values of one prolate spheroidal wave function as CSV `x,phi`.
    Pswf {
        #[arg(long)]
        w: f64,
        #[arg(long)]
        j: usize,
        /// File with one abscissa per line.
        #[arg(long, conflicts_with = "grid")]
        points_file: Option<PathBuf>,
        /// Number of equispaced points on [-1, 1].
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Eigenvalues as CSV `j,chi,mu`.
    Eigs {
        #[arg(long)]
        w: f64,
        #[arg(long)]
        jmax: usize,
    },
    /// Least-squares fit from random samples; prints the fit as JSON.
    Fit {
        #[arg(long)]
        function: String,
        #[arg(long, default_value = "slepian")]
        basis: String,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        w: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of complex Gaussian noise on the samples.
        #[arg(long)]
        noise_std: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Builds and certifies Slepian emulation networks.
    Construct {
        #[arg(long)]
        w: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        /// Multi-index (d entries); all of the index set when omitted.
        #[arg(long, num_args = 1..)]
        nu: Option<Vec<usize>>,
        /// Writes the networks as a JSON array.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trains a network described by a TOML file.
    NnTrain {
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs an experiment grid described by a TOML file; CSV output.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the canned configuration of a figure.
    Figure {
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "desk")]
        scale: String,
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Checks every executable inequality and prints a pass/fail table.
    Verify {
        /// Adds the expensive three-dimensional checks.
        #[arg(long)]
        slow: bool,
    },
}

/// Failure categories of a command.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::OutsideDomain { .. }
            | Error::IndexOutOfRange { .. }
            | Error::DimensionMismatch { .. }
            | Error::Parse(_)
            | Error::Io(_)
            | Error::EpsCondition { .. }
            | Error::Underdetermined { .. } => Failure::Usage(e.to_string()),
            other => Failure::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Failed(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Failed(m)) => {
            let _ = writeln!(err, "failed: {m}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Pswf { w, j, points_file, grid } => pswf(w, j, points_file.as_deref(), grid, out),
        Command::Eigs { w, jmax } => eigs(w, jmax, out),
        Command::Fit { function, basis, d, w, n, m, seed, noise_std, out: path } => {
            fit(&function, &basis, d, w, n, m, seed, noise_std, path.as_deref(), out)
        }
        Command::Construct { w, n, d, eps, nu, out: path } => construct(w, n, d, eps, nu, path.as_deref(), out),
        Command::NnTrain { config } => nn_train(&config, out),
        Command::Experiment { config, workers, out: path } => experiment(&config, workers, path.as_deref(), out),
        Command::Figure { name, scale, out_dir, workers } => {
            let scale: Scale = scale.parse()?;
            let r = reproduce_figure(&name, scale, Some(&out_dir), workers)?;
            for line in r.summary {
                writeln!(out, "{line}")?;
            }
            Ok(())
        }
        Command::Verify { slow } => {
            let results = verify_suite(slow);
            let mut all = true;
            for r in &results {
                all &= r.passed;
                writeln!(out, "{} | {} | {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail)?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            writeln!(out, "{} checks, {} failed", results.len(), failed)?;
            if all {
                Ok(())
            } else {
                Err(Failure::Failed(format!("{failed} verification checks failed")))
            }
        }
    }
}

fn read_points(path: &Path) -> std::result::Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.split(',').next().unwrap_or("").trim();
        if tok.is_empty() {
            continue;
        }
        match tok.parse::<f64>() {
            Ok(v) => pts.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Failure::Usage(format!("line {}: cannot parse '{tok}'", i + 1))),
        }
    }
    Ok(pts)
}

fn pswf(w: f64, j: usize, points_file: Option<&Path>, grid: Option<usize>, out: &mut dyn Write) -> CmdResult {
    let xs = match (points_file, grid) {
        (Some(p), _) => read_points(p)?,
        (None, Some(g)) if g >= 2 => (0..g).map(|i| -1.0 + 2.0 * i as f64 / (g - 1) as f64).collect(),
        (None, Some(_)) => return Err(Failure::Usage("--grid needs at least 2 points".into())),
        (None, None) => return Err(Failure::Usage("give --points-file or --grid".into())),
    };
    let basis = ProlateBasis1D::<f64>::new(w, j)?;
    let vals = basis.evaluate_many(j, &xs)?;
    writeln!(out, "x,phi")?;
    for (x, v) in xs.iter().zip(vals) {
        writeln!(out, "{x:e},{v:e}")?;
    }
    Ok(())
}

fn eigs(w: f64, jmax: usize, out: &mut dyn Write) -> CmdResult {
    let basis = ProlateBasis1D::<f64>::new(w, jmax)?;
    writeln!(out, "j,chi,mu")?;
    for j in 0..=jmax {
        writeln!(out, "{j},{:e},{:e}", basis.chi()[j], basis.mu()[j])?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fit(
    function: &str,
    basis: &str,
    d: usize,
    w: f64,
    n: usize,
    m: usize,
    seed: u64,
    noise_std: Option<f64>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let f = TargetFunction::<f64>::from_name(function)?;
    let b = match basis {
        "slepian" => TensorBasis::slepian_cross(w, d, n)?,
        "legendre" => TensorBasis::polynomial_cross(PolyFamily::LegendreNormalized, d, n)?,
        "chebyshev" => TensorBasis::polynomial_cross(PolyFamily::ChebyshevFirstKind, d, n)?,
        other => return Err(Failure::Usage(format!("unknown basis '{other}'"))),
    };
    let noise = match noise_std {
        Some(s) if s >= 0.0 => NoiseSpec::ComplexGaussian { level: s },
        Some(s) => return Err(Failure::Usage(format!("noise std must be nonnegative, got {s}"))),
        None => NoiseSpec::Zero,
    };
    let train_set = make_training_set(&f, d, m, seed, &noise)?;
    let test_set = make_test_set(&f, d, m, TestSize::default(), seed)?;
    let r = fit_with_test(&b, &train_set, &test_set)?;
    let json = r.to_json()?;
    if let Some(p) = path {
        std::fs::write(p, &json)?;
    }
    writeln!(out, "{json}")?;
    Ok(())
}

fn construct(w: f64, n: usize, d: usize, eps: f64, nu: Option<Vec<usize>>, path: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let set = IndexSet::hyperbolic_cross(d, n)?;
    let basis = ProlateBasis1D::<f64>::new(w, set.max_component())?;
    let targets: Vec<Vec<usize>> = match nu {
        Some(v) => vec![v],
        None => set.to_vecs(),
    };
    writeln!(out, "nu,depth,size,sup_error,bound")?;
    let mut nets: Vec<Network<f64>> = Vec::new();
    for t in &targets {
        let c = slepian_net(&basis, &set, t, eps)?;
        let label = t.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(
            out,
            "{label},{},{},{:e},{:e}",
            c.net.depth(),
            c.net.size(),
            c.certificate.sup_error,
            c.certificate.bound
        )?;
        nets.push(c.net);
    }
    if let Some(p) = path {
        std::fs::write(p, serde_json::to_string(&nets).map_err(|e| Failure::Failed(e.to_string()))?)?;
    }
    Ok(())
}

/// `nn-train` configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnTrainFile {
    pub function: String,
    pub m: usize,
    #[serde(default = "default_test")]
    pub test_size: usize,
    #[serde(default)]
    pub data_seed: u64,
    /// Loss trace CSV path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    /// Trained network JSON path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub train: TrainConfig,
}

fn default_test() -> usize {
    1000
}

fn nn_train(path: &Path, out: &mut dyn Write) -> CmdResult {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let cfg: NnTrainFile = toml::from_str(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    let f = TargetFunction::<f64>::from_name(&cfg.function)?;
    if !f.is_real() {
        return Err(Failure::Usage("network training needs a real-valued target".into()));
    }
    let train_set = make_training_set(&f, f.dimension(), cfg.m, cfg.data_seed, &NoiseSpec::Zero)?;
    let test_set = make_test_set(&f, f.dimension(), cfg.m, TestSize::Fixed(cfg.test_size), cfg.data_seed)?;
    let real = |s: &slepian_core::sampling::SampleSet<f64>| {
        Dataset::new(s.d, s.points.clone(), s.values.iter().map(|z| z.re).collect())
    };
    let (tr, te) = (real(&train_set)?, real(&test_set)?);
    let net0 = match &cfg.train.init {
        InitKind::Slepian(sc) => slepian_initialization(&f, sc, cfg.train.seed)?.net,
        _ => init_weights::<f64>(&cfg.train)?,
    };
    let res = train(&net0, &tr, Some(&te), &cfg.train)?;
    if let Some(p) = &cfg.trace {
        write_trace_csv(&res.trace, std::fs::File::create(p)?)?;
    }
    if let Some(p) = &cfg.model {
        std::fs::write(p, res.net.to_json()?)?;
    }
    let summary = serde_json::json!({
        "function": cfg.function,
        "num_params": res.net.num_params(),
        "epochs": cfg.train.epochs,
        "rmse_train": mse(&res.net, &tr)?.sqrt(),
        "rmse_test": mse(&res.net, &te)?.sqrt(),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&summary).map_err(|e| Failure::Failed(e.to_string()))?)?;
    Ok(())
}

fn experiment(path: &Path, workers: Option<usize>, out_path: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let cfg = ExperimentConfig::load(path)?;
    let rows = run_experiment(&cfg, workers)?;
    let target = out_path.map(Path::to_path_buf).or_else(|| cfg.output.as_ref().map(PathBuf::from));
    match target {
        Some(p) => write_csv(&rows, std::io::BufWriter::new(std::fs::File::create(p)?))?,
        None => write_csv(&rows, &mut *out)?,
    }
    Ok(())
}
