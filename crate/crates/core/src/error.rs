use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point coordinate {value} lies outside [-1, 1]")]
    OutsideDomain { value: f64 },
    #[error("index {index} out of range (maximum {max})")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("Legendre tail still above tolerance after doubling to ntrunc = {ntrunc}")]
    TruncationFailed { ntrunc: usize },
    #[error("eigenvalue ordering violated at index {index}")]
    OrderingViolation { index: usize },
    #[error("eigen-residual {residual:e} for index {index} exceeds tolerance")]
    ResidualTooLarge { index: usize, residual: f64 },
    #[error("least squares needs m >= #basis, got m = {m}, basis size {n}")]
    Underdetermined { m: usize, n: usize },
    #[error("degenerate fit: sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e}")]
    DegenerateFit { sigma_min: f64, sigma_max: f64 },
    #[error("{what}: certified error {error:e} exceeds bound {bound:e}")]
    CertificationFailed { what: String, error: f64, bound: f64 },
    #[error("epsilon {eps:e} violates the admissibility limit {limit:e}")]
    EpsCondition { eps: f64, limit: f64 },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("arithmetic overflow evaluating {0}")]
    Overflow(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
