use alloc::string::String;
use core::fmt;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes disagree. `context` names the layer, head or argument.
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },
    /// Arguments were produced by incompatible calls (e.g. a cache from a
    /// different network, or a baseline from a different mode).
    Protocol(String),
    /// A non-finite value appeared. `index` locates it when meaningful
    /// (batch row, coordinate, transition).
    Numeric { context: String, index: Option<usize> },
    /// Invalid configuration value.
    Config(String),
    /// Malformed input value (out-of-range action index, bad transition).
    Validation(String),
    /// The replay buffer holds fewer transitions than requested.
    InsufficientData { requested: usize, available: usize },
    /// A computation would exceed its enumeration budget.
    Resource { required: u64, budget: u64 },
    /// The environment failed while stepping.
    Environment(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            found,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                context,
                expected,
                found,
            } => write!(f, "dimension mismatch in {context}: expected {expected}, found {found}"),
            Error::Protocol(msg) => write!(f, "protocol error: {msg}"),
            Error::Numeric {
                context,
                index: Some(i),
            } => write!(f, "non-finite value in {context} at index {i}"),
            Error::Numeric {
                context,
                index: None,
            } => write!(f, "non-finite value in {context}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::InsufficientData {
                requested,
                available,
            } => write!(
                f,
                "insufficient data: requested {requested} samples from {available} stored"
            ),
            Error::Resource { required, budget } => write!(
                f,
                "resource budget exceeded: {required} entries required, budget is {budget}"
            ),
            Error::Environment(msg) => write!(f, "environment fault: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
