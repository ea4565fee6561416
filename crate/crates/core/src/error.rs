//! Crate-wide error type.

/// Errors surfaced by cache operations, kernels, and the witness protocols.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two shapes that must agree do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An operation that requires at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A NaN or infinity reached a kernel that requires finite data.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A point violated the unit-ball contract of the clusterability routines.
    #[error("point norm {norm} exceeds the unit-ball limit {limit}")]
    NormBoundExceeded { norm: f64, limit: f64 },

    /// The spike constant does not separate the bit-0 and bit-1 bounds.
    #[error("separation violated: spike constant {c} must exceed {required}")]
    SeparationViolated { c: f64, required: f64 },

    /// A parameter was outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
