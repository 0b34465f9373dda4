use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape or length disagreement between caller data and a contract.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A precondition was violated (stale cache, stepping a terminated
    /// environment, goal leakage, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
