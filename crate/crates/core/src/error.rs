use thiserror::Error;

/// Errors raised by the library operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("form degree {p} out of range for dimension {n}")]
    DegreeOutOfRange { p: usize, n: usize },
    #[error("bracket table violates the Jacobi identity (defect {defect:e})")]
    JacobiViolation { defect: f64 },
    #[error("frame change matrix is singular (normalized determinant {ratio:e})")]
    SingularFrame { ratio: f64 },
    #[error("vectors are not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },
    #[error("matrix is not in SL(n, Z): determinant {det}")]
    NotUnimodular { det: String },
    #[error("zero vector has no gcd completion")]
    ZeroVector,
    #[error("principal logarithm unavailable: eigenvalue on the closed negative real axis")]
    BranchUnavailable,
    #[error("logarithm iteration failed to converge (residual {residual:e})")]
    LogNotConverged { residual: f64 },
    #[error("rank decision ambiguous: singular value {value:e} too close to threshold {tol:e}")]
    RankAmbiguous { value: f64, tol: f64 },
    #[error("collapse target k = {k} exceeds d - d' = {max}")]
    KTooLarge { k: usize, max: usize },
    #[error("matrix is not semisimple (defect {defect:e})")]
    NotSemisimple { defect: f64 },
    #[error("obstruction vector is zero: bundle is trivial")]
    TrivialBundle,
    #[error("Euler map is not injective (rank {rank} < {k})")]
    NotInjective { rank: usize, k: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("operator has a negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
