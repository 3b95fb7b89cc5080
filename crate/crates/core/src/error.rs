use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input that must be non-empty was empty.
    Empty(&'static str),
    /// A value violated a documented precondition.
    InvalidArgument(String),
    /// A value that must be finite was NaN or infinite.
    NonFinite(&'static str),
    /// A token id was not below the vocabulary size.
    TokenOutOfRange { id: u32, vocab_size: usize },
    /// Enumeration was requested over a space larger than the limit.
    SpaceTooLarge { size: u128, limit: u128 },
    /// Two collections that must be aligned had different lengths.
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Empty(what) => write!(f, "{what} must not be empty"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonFinite(what) => write!(f, "{what} is not finite"),
            Error::TokenOutOfRange { id, vocab_size } => {
                write!(f, "token id {id} out of range for vocabulary of size {vocab_size}")
            }
            Error::SpaceTooLarge { size, limit } => {
                write!(f, "sequence space of size {size} exceeds enumeration limit {limit}")
            }
            Error::CountMismatch { what, expected, found } => {
                write!(f, "{what}: expected {expected} entries, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}
