use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Shapes disagree, entries are non-finite, or a parameter is out of range.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A matrix that must be positive semidefinite has an eigenvalue below
    /// the tolerated estimation noise.
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} < -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },
    /// An iterative factorization hit its iteration cap.
    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
