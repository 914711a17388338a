use thiserror::Error;

/// Errors produced anywhere in the forecasting toolkit.
///
/// Every variant belongs to one [`ErrorClass`], which front ends map onto
/// exit codes or user-facing categories.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("data error at line {line}: {message}")]
    DataAtLine { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("rank-deficient design matrix (pivot {pivot} below tolerance)")]
    RankDeficient { pivot: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate window {window}: all timestamps identical")]
    DegenerateWindow { window: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no restart converged for {model} after {restarts} restarts")]
    Convergence { model: String, restarts: usize },

    #[error("division-domain error at index {index}: {what} is zero")]
    DivisionDomain { index: usize, what: &'static str },

    #[error("degenerate intensity: expected event count {expected} at horizon is ~0")]
    DegenerateIntensity { expected: f64 },
}

/// Coarse error category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Convergence,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Usage(_) => ErrorClass::Usage,
            Error::Convergence { .. } => ErrorClass::Convergence,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
