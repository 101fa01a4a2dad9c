use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("banded factorization failed: pivot {pivot:e} at row {row} is below working precision")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("no admissible epsilon: interval ({lo}, {hi}) is empty")]
    NoAdmissibleEpsilon { lo: f64, hi: f64 },

    #[error("dissipativity margin is not positive ({value:e})")]
    NonPositiveMargin { value: f64 },

    #[error("hypotheses violated: {0}")]
    HypothesisFailed(String),

    #[error("Picard iteration did not converge at step {step}: residual {residual:e} after {iterations} iterations")]
    PicardNotConverged { step: usize, residual: f64, iterations: usize },

    #[error("non-finite values produced at step {step}")]
    Divergence { step: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("convergence study: {0}")]
    Convergence(String),

    #[error("config line {line}, column {column}: {message}")]
    Config { line: usize, column: usize, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
