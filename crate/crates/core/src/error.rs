//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Everything that can go wrong, grouped by who is at fault.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed inputs: indices out of range, mismatched ground sets,
    /// values that are not cells of the declared semi-ring.
    #[error("structural error: {0}")]
    Structural(String),

    /// An operation's stated precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Exact enumeration would exceed a configured cap; the caller should
    /// switch to sampling mode or raise the cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A proven internal inequality failed; this signals a bug (for example
    /// a fabricated witness), never a bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// Instance-level validation failed (malformed graph, class sizes, ...).
    #[error("validation failed: {0}")]
    Validation(String),

    /// Input file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The user-configured iteration cap was reached.
    #[error("iteration cap of {0} exceeded")]
    IterationCap(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
