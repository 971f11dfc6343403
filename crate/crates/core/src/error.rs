use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid node id {0}")]
    InvalidId(u32),

    #[error("unknown variable {0}")]
    UnknownVariable(u32),

    #[error("inconsistent term: contains both {0} and -{0}")]
    InvalidTerm(u32),

    #[error("invalid universe: function depends on variables outside it")]
    InvalidUniverse,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
