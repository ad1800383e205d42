use thiserror::Error;

/// Errors raised by the evaluation, search and sampling routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its domain invariant.
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// A closed form is undefined at this parameter (e.g. a `1 - rho^2` denominator at `rho = 1`).
    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    /// The high-SNR regime conditions do not hold for the requested target.
    #[error("outside the high-SNR regime: {0}")]
    Regime(String),

    /// A Gram matrix could not be factorized.
    #[error("singular Gram matrix: {0}")]
    Singular(String),

    /// The target is infeasible everywhere in the searched range.
    #[error("unbounded: {0}")]
    Unbounded(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
