use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dilation index must be a positive integer")]
    ZeroDilation,
    #[error("argument {0} is outside the supported range |t| <= 2^52")]
    OutOfRange(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frequency vector must not be zero")]
    ZeroFrequency,
    #[error("frequency vector {0:?} is not in canonical orientation")]
    NonCanonical(Vec<i64>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("sequence is not invertible: leading coefficient is zero")]
    Singular,
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("exponent q must satisfy 1 < q < infinity, got {0}")]
    InvalidExponent(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
