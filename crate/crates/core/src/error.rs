use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters or configuration supplied by the caller.
    #[error("config error: {0}")]
    Config(String),
    /// Problems reading or interpreting input data.
    #[error("data error: {0}")]
    Data(String),
    /// A computation became degenerate (e.g. a class was fully rejected).
    #[error("degenerate result: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
