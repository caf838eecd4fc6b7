use thiserror::Error;

/// Errors raised by the accounting, bound and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity would overflow `f64`. `log_value` is its natural log when known.
    #[error("range error: {what} overflows (ln value = {log_value})")]
    Range { what: String, log_value: f64 },

    /// A structural precondition (e.g. `M >= 3`) does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A requested model is not valid on the requested range.
    #[error("validity error: {0}")]
    Validity(String),

    /// An iterative solver failed to bracket or converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An integer search ran past its ceiling.
    #[error("saturation: {0}")]
    Saturation(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(what: impl Into<String>, log_value: f64) -> Self {
        Error::Range {
            what: what.into(),
            log_value,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
