use thiserror::Error;

/// Failure modes shared by every evaluation routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrushinError {
    /// Argument outside the strip or on a pole of a holomorphic extension.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// Value outside the range of an inverse map.
    #[error("range error in {func}: {detail}")]
    Range { func: &'static str, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input violates the preconditions of the requested method or formula.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Quadrature or root-finding did not reach its tolerance.
    #[error("no convergence in {what}: {detail}")]
    NonConvergence { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, GrushinError>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> GrushinError {
    GrushinError::Domain { func, detail: detail.into() }
}

pub(crate) fn precondition(detail: impl Into<String>) -> GrushinError {
    GrushinError::Precondition(detail.into())
}

pub(crate) fn invalid(detail: impl Into<String>) -> GrushinError {
    GrushinError::InvalidParameter(detail.into())
}
