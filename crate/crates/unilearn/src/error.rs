//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input's shape does not match what the operation requires.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A construction or method precondition failed; the message names the
    /// violated inequality.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A sampling method tried to query past its budget.
    #[error("query budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Two runs that must be observationally identical were not.
    #[error("blindness violated: {0}")]
    BlindnessViolated(String),

    /// The measured adversarial error fell below its proven floor, which
    /// indicates a wiring bug rather than a numeric accident.
    #[error("fooling floor violated: {0}")]
    FloorViolated(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
