use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grade mismatch: expected {expected}, found {found}")]
    GradeMismatch { expected: usize, found: usize },

    #[error("grade overflow: grade {grade} exceeds ambient dimension {dim}")]
    GradeOverflow { grade: usize, dim: usize },

    #[error("ambient dimension {0} exceeds the supported maximum of 16")]
    DimensionTooLarge(usize),

    #[error("operation is undefined for the zero element")]
    ZeroElement,

    #[error("unsupported quadrature order {order} (supported: 1, 2, 3, 5)")]
    UnsupportedOrder { order: usize },

    #[error("integrator step underflow at t = {time} (step {step:e}, error estimate {estimate:e})")]
    StepUnderflow { time: f64, step: f64, estimate: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
