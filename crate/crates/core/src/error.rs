use thiserror::Error;

/// Errors raised across the library.
///
/// The variants map onto the CLI exit codes: parameter and precondition
/// problems exit with 2, malformed data exits with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} size {got} exceeds the limit of {limit}")]
    Size {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("unsupported dimension {0} (at most 2)")]
    UnsupportedDimension(usize),

    #[error("filtration invariant violated: {0}")]
    InvariantViolation(String),

    #[error("candidate diagram has {got} points, support allows at most {limit}")]
    Support { got: usize, limit: usize },

    #[error("construction not applicable: {0}")]
    NotApplicable(String),

    #[error("line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("no points")]
    NoPoints,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Data { .. } | Error::Io(_) => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
