use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("prime {0} is outside the supported range (2..=31)")]
    UnsupportedPrime(u64),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("element is not in the first level stabilizer (root label {0})")]
    NotInStabilizer(u8),
    #[error("vertex of depth {depth} exceeds truncation depth {max}")]
    DepthOverflow { depth: usize, max: usize },
    #[error("word parse error at `{token}`: {reason}")]
    WordParse { token: String, reason: String },
    #[error("not a multi-EGS group: all spaces null")]
    AllSpacesNull,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enumeration limit of {limit} elements exceeded ({partial} elements found so far)")]
    LimitExceeded { limit: usize, partial: usize },
    #[error("no preimage found after exhausting {searched} stabilizer elements")]
    NotFound { searched: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
