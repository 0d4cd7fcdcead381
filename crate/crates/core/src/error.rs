use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown problem `{0}` (expected gaussian, cosine_quadratic or predictor)")]
    UnknownProblem(String),
    #[error("unknown stream family `{0}` (expected iid_uniform, ar1_bounded or moving_average)")]
    UnknownFamily(String),
    #[error("step size {step} exceeds lambda_max = {max}")]
    StepTooLarge { step: f64, max: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("sample sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("problem size {size} exceeds the cap {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("P is not absolutely continuous w.r.t. Q (index {index}); divergence is +inf")]
    NotAbsolutelyContinuous { index: usize },
    #[error("grid rejected: {0}")]
    Grid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
