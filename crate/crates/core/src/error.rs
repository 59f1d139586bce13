//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on the input values was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Shapes of the operands do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An iterative method ran out of iterations; carries the last residual.
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    /// The requested quantity is not defined for these inputs (e.g. an
    /// expansion evaluated outside its validity region).
    #[error("out of domain: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// Wraps a convergence error with extra context, preserving the numbers.
    pub(crate) fn with_context(self, extra: &str) -> Self {
        match self {
            Error::Convergence {
                context,
                iterations,
                residual,
            } => Error::Convergence {
                context: format!("{extra}: {context}"),
                iterations,
                residual,
            },
            other => other,
        }
    }
}
