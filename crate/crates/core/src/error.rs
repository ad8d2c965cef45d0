use thiserror::Error;

/// Errors raised by shift construction, enumeration and the numeric routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmsError {
    /// Input outside the domain of an operation (unknown state, bad word, bad parameter).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested enumeration would not terminate without a truncation bound.
    #[error("enumeration refused: unbounded branching at {state}; set `{parameter}` to truncate")]
    Unbounded { state: String, parameter: &'static str },

    /// The enumeration would exceed the configured cap.
    #[error("enumeration refused: more than {cap} items ({what})")]
    CapExceeded { what: String, cap: usize },

    /// A connecting word was not found within the searched horizon.
    #[error("no connector from {from} to {to} within horizon {horizon}")]
    Unreachable { from: String, to: String, horizon: usize },

    /// A series that was required to converge diverges.
    #[error("divergent: {0}")]
    Divergent(String),

    /// A root-finding problem has no solution in the admissible region.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Malformed shift, potential or run configuration document.
    #[error("invalid spec at `{path}`: {message}")]
    Spec { path: String, message: String },
}

impl CmsError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        CmsError::Domain(msg.into())
    }

    pub(crate) fn spec(path: impl Into<String>, message: impl Into<String>) -> Self {
        CmsError::Spec {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by refusing an unbounded or oversized computation.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            CmsError::Unbounded { .. } | CmsError::CapExceeded { .. } | CmsError::Unreachable { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, CmsError>;
