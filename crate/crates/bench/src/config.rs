//! Experiment configuration, stored as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use slepian_core::nettrain::TrainConfig;
use slepian_core::sampling::{NoiseSpec, TestSize};
use slepian_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ls,
    Nn,
    Pet,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Nn => "nn",
            Method::Pet => "pet",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Slepian,
    Legendre,
    Chebyshev,
}

impl BasisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisKind::Slepian => "slepian",
            BasisKind::Legendre => "legendre",
            BasisKind::Chebyshev => "chebyshev",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    ComplexGaussian,
    RealGaussian,
    /// Complex Gaussian rescaled so that `‖e‖₂` equals the level.
    ScaledToNorm,
}

/// How a value of the `n` grid is turned into a network for `method = "nn"`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureRule {
    /// `n` hidden layers of width `10n`.
    #[default]
    Ratio,
    /// `nn.architecture` as given; `n` is only a label.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub function: String,
    pub method: Method,
    #[serde(default = "default_basis")]
    pub basis: BasisKind,
    pub d: usize,
    #[serde(default = "default_w")]
    pub w: f64,
    pub n_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    #[serde(default)]
    pub noise_level: f64,
    /// Test points as a fraction of `m`; ignored when `test_size` is set.
    #[serde(default = "default_ratio")]
    pub test_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nn: Option<TrainConfig>,
    #[serde(default)]
    pub architecture_rule: ArchitectureRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Wall-clock times make output non-reproducible, so they are opt-in.
    #[serde(default)]
    pub record_runtime: bool,
}

fn default_basis() -> BasisKind {
    BasisKind::Slepian
}
fn default_w() -> f64 {
    1.0
}
fn default_trials() -> usize {
    1
}
fn default_ratio() -> f64 {
    0.2
}
fn default_delta() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_grid.is_empty() || self.m_grid.is_empty() {
            return bad("n_grid and m_grid must be nonempty".into());
        }
        if self.n_grid.contains(&0) || self.m_grid.contains(&0) {
            return bad("grid values must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(1..=3).contains(&self.d) {
            return bad(format!("d must be 1, 2 or 3, got {}", self.d));
        }
        if self.w.is_nan() || self.w < 1.0 {
            return bad(format!("w must be >= 1, got {}", self.w));
        }
        if self.method == Method::Nn && self.nn.is_none() {
            return bad("method = \"nn\" needs an [nn] table".into());
        }
        if self.method == Method::Pet && self.eps.is_none() {
            return bad("method = \"pet\" needs eps".into());
        }
        if self.noise_level.is_nan() || self.noise_level < 0.0 {
            return bad("noise_level must be nonnegative".into());
        }
        if self.id.contains(',') || self.id.contains('\n') {
            return bad("id must not contain commas or newlines".into());
        }
        self.test_rule().count(1)?;
        Ok(())
    }

    pub fn noise_spec(&self) -> NoiseSpec<f64> {
        let level = self.noise_level;
        match self.noise_kind {
            NoiseKind::None => NoiseSpec::Zero,
            NoiseKind::ComplexGaussian => NoiseSpec::ComplexGaussian { level },
            NoiseKind::RealGaussian => NoiseSpec::RealGaussian { level },
            NoiseKind::ScaledToNorm => NoiseSpec::ScaledToNorm { norm: level },
        }
    }

    pub fn test_rule(&self) -> TestSize {
        match self.test_size {
            Some(k) => TestSize::Fixed(k),
            None => TestSize::Ratio(self.test_ratio),
        }
    }
}
