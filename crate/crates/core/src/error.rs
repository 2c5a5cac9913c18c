use thiserror::Error;

/// Errors raised across the construction and classification pipeline.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is singular or numerically singular")]
    Singular,
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("product vector search failed: {0}")]
    Search(String),
    #[error("state is not in the rank-(4,4) class: {0}")]
    NotInClass(String),
    #[error("no ordering gives four positive invariants; not SL-equivalent to an orthogonal UPB")]
    NotOrthogonalizable,
    #[error("null space is not one-dimensional (gap ratio {0:e})")]
    AmbiguousNullSpace(f64),
    #[error("reconstruction residual {0:e} exceeds tolerance")]
    Reconstruction(f64),
    #[error("state is not PPT (min eigenvalue of partial transpose {0:e})")]
    NotPpt(f64),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("group closure did not terminate after {0} compositions")]
    Closure(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
