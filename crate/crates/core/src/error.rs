use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("component index {index} out of range for family of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("nonexpansivity violated: eta = {eta} exceeds 2/L_max = {limit}")]
    NonexpansivityViolated { eta: f64, limit: f64 },

    #[error("oracle failed / possibly empty intersection: {0}")]
    OracleFailed(String),

    #[error("singular normal equations ({0}); use a projection (feasibility) family for non-unique fixed point sets")]
    SingularSystem(String),

    #[error("run diverged at iteration {iteration} (seed {seed})")]
    Diverged { iteration: u64, seed: u64 },

    #[error("gap below noise floor; shrink window ({0})")]
    GapBelowNoiseFloor(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
