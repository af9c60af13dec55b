//! Error type shared across the toolkit.

use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories surfaced by the toolkit.
///
/// `Config` covers invalid parameters and malformed inputs, `Numerical`
/// covers solver breakdowns (singularities, non-convergence, instability),
/// and `Io` covers file and format problems.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Error::Io(msg.into())
    }

    /// Stable machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Error::Config(m) | Error::Numerical(m) | Error::Io(m) => m,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.category(), self.message())
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
