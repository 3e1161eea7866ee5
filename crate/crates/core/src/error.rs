use thiserror::Error;

/// Errors raised by the numerical routines and experiment driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GramError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be at least {min}, got {got}")]
    InvalidDimension { min: usize, got: usize },
    #[error("sequence must contain at least one state")]
    EmptySequence,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("zero vector cannot be normalized to a ray")]
    ZeroVector,
    #[error("malformed matrix: {0}")]
    Malformed(String),
    #[error("matrix is not positive semidefinite: smallest eigenvalue {0:e}")]
    NotPositiveSemidefinite(f64),
    #[error("matrix is not unitary: deviation {0:e}")]
    NotUnitary(f64),
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T, E = GramError> = std::result::Result<T, E>;
