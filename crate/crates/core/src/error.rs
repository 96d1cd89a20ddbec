use thiserror::Error;

/// Errors produced by the solvers and primitives in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spectrum degeneracy: {0}")]
    SpectrumDegeneracy(String),

    /// The general fit's eigenvalue condition failed; carries the worst
    /// (most negative) margin gamma_i - delta_hat over i <= q.
    #[error("eigenvalue condition failed (worst margin {margin:.6e})")]
    ConditionFailed { margin: f64 },

    #[error("iteration did not converge after {iterations} steps")]
    NotConverged { iterations: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("degenerate clustering: {0}")]
    DegenerateClustering(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
