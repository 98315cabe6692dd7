use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid local dimension {0}: must be at least 2")]
    InvalidLocalDim(usize),

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("index {index} out of range for basis of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operation requires qubit subsystems, got dims {0:?}")]
    NotQubits(Vec<usize>),

    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not special unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("vectors have different norms ({0} vs {1})")]
    NormMismatch(f64, f64),

    #[error("zero vector has no rotation")]
    ZeroVector,

    #[error("counterexample parameters not normalized: a^2+b^2+c^2 = {0}")]
    Unnormalized(f64),

    #[error("counterexample parameters ({a}, {b}, {c}) lie outside the positivity region")]
    OutsidePositivityRegion { a: f64, b: f64, c: f64 },

    #[error("moment set has no entry for subset {0}")]
    MissingSubset(String),

    #[error("invalid grid step {0}: must lie in (0, 0.2]")]
    InvalidGridStep(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
