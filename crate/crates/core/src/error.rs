use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
    #[error("element is not homogeneous")]
    Inhomogeneous,
    #[error("algebra validation failed: {check} residual {residual:e}")]
    InvalidAlgebra { check: String, residual: f64 },
    #[error("isomorphism verification failed: {check} residual {residual:e}")]
    NotAnIsomorphism { check: String, residual: f64 },
    #[error("derivation family is not closed under brackets (residual {0:e})")]
    FamilyNotClosed(f64),
    #[error("derivation is not in the span of the family (residual {0:e})")]
    NotInFamily(f64),
    #[error("cochains use different derivation families")]
    FamilyMismatch,
    #[error("algebra is not special: {0}")]
    NotSpecial(String),
    #[error("symplectic form is degenerate (residual {0:e})")]
    Degenerate(f64),
    #[error("invalid state: {reason}")]
    InvalidState { reason: String, witness: Option<Vec<[f64; 2]>> },
    #[error("operation needs a matrix realization")]
    NoMatrixRealization,
    #[error("no product symplectic structure: {0}")]
    NoProductStructure(String),
    #[error("grid check failed: {0}")]
    Grid(String),
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
