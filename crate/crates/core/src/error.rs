use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map one-to-one onto the exit-code classes used by the
/// command line runner: invalid inputs, exceeded resource budgets and
/// numerical failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An enumeration or memory budget would be exceeded.
    #[error("resource budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: u128,
        budget: u128,
    },
    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A bit stream ran dry before the requested output was complete.
    #[error(
        "bit stream exhausted after {bits_consumed} bits: produced {produced} of {requested} symbols"
    )]
    BitsExhausted {
        bits_consumed: u64,
        produced: usize,
        requested: usize,
    },
    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
