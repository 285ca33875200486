//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by schema handling, dataset loading, operator
/// construction, classification, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: unknown experiment names, bad pipeline
    /// options, malformed schema or spec files, out-of-domain parameters.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid data content: malformed CSV, unknown categories, missing
    /// values, empty datasets or classes.
    #[error("data error: {0}")]
    Data(String),

    /// A modality list that does not fit its schema.
    #[error("encoding error: {0}")]
    Encoding(String),

    /// Numeric degeneracy: rank-zero operators, non-positive spectral gaps,
    /// invalid bandwidths.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Vector or matrix shape disagreement.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration problems,
    /// 3 for data, numeric, and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
