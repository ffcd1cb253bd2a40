//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library proper.
///
/// Oracle-level failures (timeouts, malformed model answers, ...) are a
/// separate, per-example concern and live in [`crate::oracle::OracleFailure`];
/// they are scored rather than propagated as hard errors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what} must have positive length, got [{start}, {end}]")]
    ZeroLength {
        what: &'static str,
        start: f64,
        end: f64,
    },

    #[error("invalid span [{start}, {end}]: {reason}")]
    InvalidSpan {
        start: f64,
        end: f64,
        reason: &'static str,
    },

    #[error("segment [{seg_start}, {seg_end}] is not contained in window [{win_start}, {win_end}]")]
    OutOfWindow {
        seg_start: f64,
        seg_end: f64,
        win_start: f64,
        win_end: f64,
    },

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing field `{field}` on {context}")]
    MissingField {
        field: &'static str,
        context: String,
    },

    #[error("record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("embedding vector has zero norm")]
    ZeroVector,

    #[error("index {index} out of range for {len} segments")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("malformed answer: {0}")]
    MalformedAnswer(String),

    #[error("prompt bank failed validation: {0}")]
    TemplateMismatch(String),

    #[error("{path}:{line}: {source}")]
    JsonLine {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("failed to {action} {path}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
}
