use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column {index} ({label}) has zero variance")]
    ConstantColumn { index: usize, label: String },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("series too short: {samples} samples cannot cover max lag {max_lag} and horizon {horizon}")]
    SeriesTooShort {
        samples: usize,
        max_lag: usize,
        horizon: usize,
    },

    #[error("too few samples for the k-NN estimator: {samples} rows with k = {k}")]
    TooFewSamples { samples: usize, k: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("traversal at size {size} needs {count} subsets of {candidates} candidates, above the budget of {budget}")]
    CombinationBudgetExceeded {
        candidates: usize,
        size: usize,
        count: u128,
        budget: u64,
    },

    #[error("system diverged after {retries} re-draws of the initial conditions")]
    DivergedAfterRetries { retries: usize },

    #[error("ODE integration failed at t = {time}: step size underflow")]
    IntegrationFailure { time: f64 },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
