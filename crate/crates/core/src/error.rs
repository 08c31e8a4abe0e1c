use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar parameter lies outside the domain where the operation is defined.
    #[error("domain error: {param} = {value} ({reason})")]
    Domain {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("length error: {what} has length {got}, at most {max} allowed")]
    Length { what: &'static str, got: usize, max: usize },

    /// Invalid problem or study configuration, detected before any compute.
    #[error("configuration error: {0}")]
    Config(String),

    /// Request exceeds what a dense desk-scale routine is built for.
    #[error("capability error: {0}")]
    Capability(String),

    /// Caller broke an operation's precondition (dimension or index mismatch).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
