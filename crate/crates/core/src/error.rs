use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The point sits within the pole guard and has no finite image.
    #[error("point is within {guard:e} of the north pole (1 - latitude = {gap:e})")]
    Pole { gap: f64, guard: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported target family for this operation: {0}")]
    UnsupportedFamily(String),

    #[error("degenerate proposal: |z + dz| = {0:e}")]
    DegenerateProposal(f64),

    #[error("degenerate gradient: |grad| = {0:e}")]
    DegenerateGradient(f64),

    #[error("degenerate random draw")]
    DegenerateDraw,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("bounce clock failed: rate is non-finite at t = {at}")]
    Clock { at: f64, last_finite: f64 },

    #[error("excluded case: {0}")]
    DegenerateCase(String),

    #[error("trace is empty or too short: {0}")]
    EmptyTrace(String),

    #[error("path too short: {0}")]
    InsufficientPath(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
