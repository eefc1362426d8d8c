use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented invariant. `field` is a
    /// dotted path into the configuration document.
    #[error("invalid configuration at `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// Operands with incompatible shapes.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid value at position {position}: {reason}")]
    Validation { position: usize, reason: String },

    /// Evaluation left the domain of a formula.
    #[error("numerical domain error: {0}")]
    Domain(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("search space of {size} candidates exceeds cap {cap}")]
    SearchSpace { size: u128, cap: u128 },

    #[error("failed to parse document at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
