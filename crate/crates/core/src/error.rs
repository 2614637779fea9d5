use thiserror::Error;

/// Errors raised by grid construction, assembly, factorization and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular (pivot {index} has modulus {modulus:e})")]
    SingularMatrix { index: usize, modulus: f64 },

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("grid cannot be coarsened: {0}")]
    NotCoarsenable(String),

    #[error("inner CSL solve failed: {0}")]
    InnerSolveFailure(String),

    #[error("invalid preconditioner configuration: {0}")]
    InvalidConfig(String),

    #[error("{method} did not converge within {iterations} iterations")]
    ConvergenceFailure { method: &'static str, iterations: usize },

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("system with {size} unknowns exceeds the dense analysis limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
