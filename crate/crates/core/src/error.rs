use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside [0, {horizon}]")]
    Domain { t: f64, horizon: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("path diverged (non-finite or |x| > 1e8) at iteration {iteration}, step {step}")]
    DivergedPath { iteration: usize, step: usize },

    #[error("estimator failure: {excluded} of {samples} paths excluded ({reason})")]
    EstimatorFailure {
        excluded: usize,
        samples: usize,
        reason: String,
    },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("oracle integrity check failed: {0}")]
    OracleIntegrity(String),

    #[error("oracle grid too narrow: {0}")]
    OracleGrid(String),

    #[error("no reference value available: {0}")]
    NotAvailable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
