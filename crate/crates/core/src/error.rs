use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by stream construction, evaluation and persistence.
///
/// Shape mismatches between tensors are programming errors and panic instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input sequence")]
    EmptySequence,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown column `{column}` (available: {available})")]
    UnknownColumn { column: String, available: String },

    #[error("parse error at row {row}, column `{column}`: {value:?} is not numeric")]
    Parse { row: usize, column: String, value: String },

    #[error("insufficient data: need {required} points, have {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("cannot place {needed} false positives in a stream of {stream_length} points")]
    InfeasibleSchedule { needed: usize, stream_length: usize },

    #[error("schedule covers {schedule} points but the stream has {stream}")]
    LengthMismatch { schedule: usize, stream: usize },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("not a checkpoint file (bad magic)")]
    BadMagic,

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("inconsistent tensor shape: {0}")]
    Shape(String),

    /// `last_good_row` counts complete data rows (1-based, header excluded).
    #[error("truncated stream dump: last good row is {last_good_row} of {expected}")]
    TruncatedDump { last_good_row: usize, expected: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
