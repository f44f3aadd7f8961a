use thiserror::Error;

/// Every failure the library reports. The CLI maps `Validation` and `Parse`
/// to exit code 1 and the solver variants to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("mass mismatch: source {src} vs target {dst}")]
    MassMismatch { src: f64, dst: f64 },

    #[error("value {q} outside [0, {total}]")]
    OutOfRange { q: f64, total: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("infeasible input: {0}")]
    Infeasible(String),

    #[error("flow left the chart at {escaped} of {total} nodes")]
    FlowEscape { escaped: usize, total: usize },

    #[error("rank-deficient design matrix (condition number {0:e})")]
    RankDeficient(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Validation(_) | Error::GridMismatch(_) | Error::Infeasible(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
