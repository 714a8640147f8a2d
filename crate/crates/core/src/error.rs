use thiserror::Error;

#[derive(Debug, Error)]
pub enum CehiError {
    /// Caller-supplied data violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A covariance matrix could not be factorized even at maximal jitter.
    #[error("conditioning failure: {0}")]
    Conditioning(String),
    /// An objective callback returned a non-finite value.
    #[error("objective returned non-finite value at {0:?}")]
    NonFiniteObjective(Vec<f64>),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CehiError>;
