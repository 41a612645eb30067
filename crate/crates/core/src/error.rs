use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("state is not normalised (squared norm {0})")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (max defect {0:e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (max defect {0:e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("line {line}: {message} (at `{token}`)")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },

    #[error("empty operator decomposition")]
    EmptyDecomposition,

    #[error("register indices overlap or are out of range: {0}")]
    InvalidRegister(String),

    #[error("no oscillation: {0}")]
    NoOscillation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
