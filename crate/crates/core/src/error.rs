use thiserror::Error;

use crate::binary::BitString;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An enumeration-backed source cannot yet certify the requested bit.
    #[error("digit {position} is not certified at the current enumeration stage")]
    UnstableDigits { position: usize },

    #[error("prefix violation: program {existing} is a prefix of (or equal to) {offending}")]
    PrefixViolation {
        existing: BitString,
        offending: BitString,
    },

    #[error("synthetic domain unrealizable: binary trie exhausted at length {length}")]
    UnrealizableSpec { length: u32 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
