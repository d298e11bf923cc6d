use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model parameter is non-finite or outside its physical domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An input lies outside the domain of a function (e.g. a non-positive distance).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or malformed configuration.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Grid ingest failure. `line` is the 1-based source line when known.
    #[error("ingest error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Ingest { line: Option<u64>, message: String },

    /// Not enough household-free cells to absorb the area expansion.
    #[error("area compensation needs {required} household-free cells but only {available} exist (shortfall {})", required - available)]
    Compensation { required: usize, available: usize },

    /// Two rasters that must be aligned have different shapes.
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    /// The grid has no valid cell to evaluate.
    #[error("grid contains no valid cells")]
    EmptyResult,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("expected a finite value, got {value}"),
        })
    }
}
