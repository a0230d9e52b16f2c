use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis of {dim} states exceeds the cap of {cap} states; lower the photon truncations")]
    DimensionOverflow { dim: u128, cap: usize },

    #[error("state {0} is not part of this basis")]
    StateNotFound(String),

    #[error("index {index} out of range for basis of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("operator/state basis mismatch (expected basis {expected:#x}, found {found:#x})")]
    BasisMismatch { expected: u64, found: u64 },

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant breach at t = {time:e}: {message}")]
    InvariantBreach { time: f64, message: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvariantBreach { .. } => 3,
            Error::InvalidParameter(_)
            | Error::Config { .. }
            | Error::DimensionOverflow { .. } => 2,
            _ => 1,
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
