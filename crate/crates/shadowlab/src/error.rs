use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("letter ids must be >= 1")]
    ZeroLetter,

    #[error("period of an eventually periodic point must be nonempty")]
    EmptyPeriod,

    #[error("enumeration index 0 is invalid; indices start at 1")]
    ZeroIndex,

    #[error("{0} is only defined on infinite points")]
    FiniteInProductModel(&'static str),

    #[error("resource ceiling exceeded: {0}")]
    Resource(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
