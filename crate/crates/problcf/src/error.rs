//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model evaluation, calibration, and file ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a type invariant (non-positive modulus, m < 1, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root/bracket search left its admissible range.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A CSV or JSON input violates its schema. `line` is 1-based and counts
    /// the header, so the first data row is line 2.
    #[error("schema error at line {line}: {message}")]
    Schema { line: u64, message: String },

    /// The optimizer or a bootstrap run failed to produce a usable estimate.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(line: u64, message: impl Into<String>) -> Self {
        Error::Schema {
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI contract: 2 schema, 3 non-convergence,
    /// 4 numerical domain, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } => 2,
            Error::NonConvergence(_) => 3,
            Error::InvalidParameter(_) | Error::Domain(_) | Error::OutOfRange(_) => 4,
            Error::Io(_) => 1,
        }
    }
}
