//! Crate-wide error type.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Rejected intensity parameters (`a >= 0`, `b > 0`, both finite).
    #[error("invalid intensity parameters: {0}")]
    InvalidParams(String),

    /// An argument fell outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// `inverse_cumulative` would need `exp(a*u/b)` beyond f64 range.
    /// Returned instead of silently producing infinity.
    #[error("inverse cumulative intensity overflow: a*u/b = {exponent:.3} exceeds the f64 exponent range")]
    Overflow { exponent: f64 },

    /// Quadrature refinement exhausted without meeting the requested
    /// relative tolerance. Carries the best estimate and its error bound.
    #[error("quadrature did not converge: best estimate {best:e}, relative error bound {error_bound:e}")]
    QuadratureAccuracy { best: f64, error_bound: f64 },

    /// A sample with no usable entries where at least one was required.
    #[error("empty sample: {0}")]
    EmptySample(String),

    /// Too few data points for the requested fit or test.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Log binning requires strictly positive intervals.
    #[error("non-positive interval {value} at index {index}")]
    NonPositiveInterval { value: f64, index: usize },

    /// All events at one instant, or a window that cannot support a fit.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    /// A per-replica failure inside an ensemble, tagged with its index.
    #[error("replica {index}: {source}")]
    Replica {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
