use alloc::string::String;
use core::fmt;

/// Errors produced by game construction and the algorithms in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: wrong dimensions, coordinates outside the unit cube,
    /// empty sample sets and the like.
    InvalidInput(String),
    /// A parameter combination that is well formed but outside the valid
    /// range, such as a linear ranking slope outside `(0, 1/n]`.
    InvalidConfig(String),
    /// The operation is not defined for this configuration (for example a
    /// gradient of the probability ranking principle).
    Unsupported(String),
    /// An enumeration would exceed its work budget.
    TooLarge {
        /// Number of items the request would enumerate.
        requested: u128,
        /// Maximum allowed.
        limit: u128,
    },
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported configuration: {msg}"),
            Error::TooLarge { requested, limit } => {
                write!(f, "enumeration of {requested} items exceeds the limit of {limit}")
            }
        }
    }
}

impl core::error::Error for Error {}

macro_rules! invalid_input {
    ($($arg:tt)*) => { $crate::Error::InvalidInput(alloc::format!($($arg)*)) };
}
macro_rules! invalid_config {
    ($($arg:tt)*) => { $crate::Error::InvalidConfig(alloc::format!($($arg)*)) };
}
macro_rules! unsupported {
    ($($arg:tt)*) => { $crate::Error::Unsupported(alloc::format!($($arg)*)) };
}
pub(crate) use {invalid_config, invalid_input, unsupported};
