use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("corpus line {line} contains the reserved pad character '_'")]
    ReservedCharacter { line: usize },
    #[error("character {0:?} is not in the vocabulary")]
    UnknownCharacter(char),
    #[error("sequence of length {len} exceeds maximum length {max}")]
    TooLong { len: usize, max: usize },
    #[error("token id {id} is out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: usize, size: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("reward function returned a non-finite value")]
    Reward,
    #[error("enumeration of {0} sequences exceeds the guard limit")]
    Guard(f64),
    #[error("unknown objective {0:?}")]
    UnknownObjective(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("malformed data: {0}")]
    Format(String),
}

pub(crate) fn dim(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
