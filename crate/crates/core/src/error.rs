use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size limit exceeded: {what} = {requested} is above the configured bound {limit}")]
    SizeLimit {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid profile: {0}")]
    ProfileValidity(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("syntax error at position {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
