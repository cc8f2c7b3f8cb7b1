use thiserror::Error;

/// Errors raised by the optimization toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{kind} surrogate needs at least {required} samples, got {available}")]
    TooFewSamples {
        kind: &'static str,
        required: usize,
        available: usize,
    },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("eigenvalue spectrum is identically zero, no subspace structure")]
    ZeroSpectrum,

    #[error("non-finite value {0} rejected")]
    NonFinite(f64),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("unknown benchmark problem `{0}` (valid ids: ex1, ex2, ex3, ex4, ex5)")]
    UnknownProblem(String),

    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
