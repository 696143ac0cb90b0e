use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("underdetermined fit: {samples} samples, at least {required} required")]
    Underdetermined { samples: usize, required: usize },

    #[error("degenerate growth rate after changepoint {index}")]
    DegenerateRate { index: usize },

    #[error("at least 20 simulations are required, got {0}")]
    InsufficientSimulations(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("window too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("training contract violated: {0}")]
    TrainingContract(String),

    #[error("cold start for {activity}: {reason}")]
    ColdStart { activity: String, reason: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("profile mismatch: {0}")]
    ProfileMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
