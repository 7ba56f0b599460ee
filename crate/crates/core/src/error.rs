use thiserror::Error;

/// Crate-wide error type. Precondition violations map to CLI exit code 2,
/// statistical acceptance failures (in `--assert` runs) to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("bad descriptor `{0}`: {1}")]
    Descriptor(String, String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration not simple: points {0} and {1} are within 1e-9")]
    NotSimple(usize, usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("statistical acceptance failed: {0}")]
    Acceptance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Error {
        Error::Precondition(msg.into())
    }
}
