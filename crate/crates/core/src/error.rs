use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A dense state of this width would exceed the configured qubit cap.
    #[error("{requested} qubits exceeds the dense simulation cap of {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: field `{field}` out of range: {value}")]
    Domain {
        line: u64,
        field: &'static str,
        value: f64,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
