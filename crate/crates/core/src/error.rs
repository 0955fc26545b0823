use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain (branch cut, invalid parameters).
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameter record violates one of its invariants.
    #[error("invalid parameters: {0}")]
    Validation(String),
    /// Quadrature or series did not reach the requested tolerance.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// Non-finite intermediate value or linear-algebra failure.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The Gram route cannot handle this parameter set.
    #[error("singular Gram matrix: {0}; use the contour kernel instead")]
    SingularGram(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
