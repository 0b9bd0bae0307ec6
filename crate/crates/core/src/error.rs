//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iteration failed to reach the requested tolerance.
    #[error("no convergence after {terms} terms (partial value {partial})")]
    Convergence { partial: f64, terms: usize },

    /// A swap or flow would drain a reserve to (or below) the floor.
    #[error("reserve depletion: {0}")]
    ReserveDepletion(String),

    /// The requested case is not covered by the model.
    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Inputs make the statistic undefined (constant regressor, zero variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A root search has no solution; the message names the violated bound.
    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("http error: {0}")]
    Http(String),

    #[error("authentication failed: {0}")]
    Auth(String),

    #[error("response schema mismatch: missing field `{0}`")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub(crate) fn require_finite(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn require_positive(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn require_non_negative(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be non-negative, got {v}")))
    }
}
