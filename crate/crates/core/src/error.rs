//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by codec, training and I/O operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or unsupported file contents (WAV, codebook, model, side info).
    #[error("format error: {0}")]
    Format(String),

    /// Caller violated a documented precondition with recoverable data
    /// (wrong sample rate, mismatched lengths, out-of-range parameter).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Numerically degenerate input (zero-energy frame, singular system).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A synthesis filter would be unstable and is refused.
    #[error("unstable filter: {0}")]
    Unstable(String),

    /// Index outside a codebook or table.
    #[error("index out of range: {0}")]
    Index(String),

    /// Side-info stream does not match the supplied codebook.
    #[error("codebook hash mismatch: {0}")]
    CodebookMismatch(String),

    /// Side-info stream inconsistent with the narrowband signal.
    #[error("stream error: {0}")]
    Stream(String),
}

pub type Result<T> = std::result::Result<T, Error>;
