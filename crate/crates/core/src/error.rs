use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural precondition on an argument failed (sizes, emptiness, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector dimension does not match the structure it is used with.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A vector that must lie on the unit sphere does not.
    #[error("norm violation: |norm - 1| = {deviation:e} exceeds {tolerance:e}")]
    NormViolation { deviation: f64, tolerance: f64 },

    /// Index is not a live vertex of the graph.
    #[error("unknown or deleted index {0}")]
    UnknownIndex(usize),

    /// File parsing: bad magic bytes or unsupported version.
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
