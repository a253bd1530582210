//! Crate-wide error type.
//!
//! Errors carry `f64` diagnostics regardless of the scalar type in use so
//! the type stays non-generic and cheap to thread through every layer.

use crate::graph::Violation;

/// Unified error for construction, numeric, learning, and I/O failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller passed indices or options that violate a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Symmetry check failed at covariance construction.
    #[error("matrix not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {deviation:.3e} exceeds {tol:.3e} * scale")]
    NotSymmetric {
        i: usize,
        j: usize,
        deviation: f64,
        tol: f64,
    },

    /// Eigenvalue-ratio positive-definiteness test failed.
    #[error("matrix not positive definite: min/max eigenvalue ratio {ratio:.3e} below {tol:.3e}")]
    NotPositiveDefinite { ratio: f64, tol: f64 },

    /// A conditioning block was numerically singular; names the offending labels.
    #[error("singular conditioning block on labels {block:?}")]
    SingularBlock { block: Vec<usize> },

    /// Input exceeds an enumeration or dimension cap.
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// Iterative solver stopped at its iteration cap; carries the residual gap.
    #[error("no convergence within iteration cap: residual duality gap {gap:.3e}")]
    Convergence { gap: f64 },

    /// Rejection sampling exhausted its budget; names the most-violated condition.
    #[error("generation failed after {tries} tries; last unsatisfied condition: {condition}")]
    Generation { tries: usize, condition: String },

    /// Sample data unusable for estimation (too few rows, degenerate covariance).
    #[error("data error: {0}")]
    Data(String),

    /// Structural invariant of a chain graph violated.
    #[error("invalid chain graph: {0}")]
    Graph(#[from] Violation),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
