use alloc::string::String;

/// Errors raised by the decomposition routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mode {mode} out of range for a {order}-way tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("factor invariant violated: {0}")]
    FactorInvariant(String),

    #[error("input is not orthogonally decomposable: found {found} row classes, expected {expected}")]
    NotDecomposable { found: usize, expected: usize },

    #[error("clustering failed: {0}")]
    Clustering(String),
}

pub type Result<T> = core::result::Result<T, Error>;
