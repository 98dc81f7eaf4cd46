//! Error type shared by every module of the crate.

use std::fmt;

/// Crate-wide error enum.
///
/// Variants map onto the CLI exit-code contract: everything except
/// [`SamError::Io`] is a validation failure (exit 1), I/O failures exit 2.
#[derive(Debug, Clone, PartialEq)]
pub enum SamError {
    /// Tensor/layer shape validation failed.
    Shape(String),
    /// Operands are degenerate for the requested operation
    /// (constant map for NSS/CC, empty fixation set, zero-sum density, ...).
    Degenerate(String),
    /// A serialized artifact is malformed (SAMT, PGM, JSON spec, ...).
    Format(String),
    /// Invalid configuration or argument values.
    Config(String),
    /// Produced or encountered a non-finite value.
    NonFinite(String),
    /// Underlying I/O failure, with path context where available.
    Io(String),
}

impl fmt::Display for SamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamError::Shape(msg) => write!(f, "shape error: {msg}"),
            SamError::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            SamError::Format(msg) => write!(f, "format error: {msg}"),
            SamError::Config(msg) => write!(f, "config error: {msg}"),
            SamError::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            SamError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for SamError {}

impl From<std::io::Error> for SamError {
    fn from(e: std::io::Error) -> Self {
        SamError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SamError>;
