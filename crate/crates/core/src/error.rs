use thiserror::Error;

/// Errors produced while building or analysing DFT frames.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported code: {0}")]
    UnsupportedCode(String),

    /// A construction produced a value that violates a structural identity,
    /// e.g. a real BCH generator with a non-negligible imaginary residue.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("matrix is ill-conditioned (1-norm condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("insufficient data: {surviving} surviving samples, need at least {required}")]
    InsufficientData { surviving: usize, required: usize },

    #[error("resource limit: {what} = {value} exceeds the bound {limit}")]
    ResourceLimit {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
