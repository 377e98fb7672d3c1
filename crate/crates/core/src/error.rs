//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by configuration validation, contract checks, parsing,
/// and numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field violates an invariant. `path` is the dotted
    /// field path (e.g. `road.lane_width`).
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A function precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Numeric failure (singular matrix, non-finite result).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A record file failed to parse. Line numbers are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Bad user-level request (unknown scenario index, empty sweep grid).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
