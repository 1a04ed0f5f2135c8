use alloc::string::String;

/// Failure modes shared by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),
    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::Error::Validation(alloc::format!($($arg)*)) };
}
macro_rules! numeric {
    ($($arg:tt)*) => { $crate::error::Error::Numeric(alloc::format!($($arg)*)) };
}
pub(crate) use invalid;
pub(crate) use numeric;
