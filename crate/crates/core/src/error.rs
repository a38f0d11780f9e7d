use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the ranking engine.
///
/// Variants fall into two families that the command-line front end maps to
/// distinct exit codes: validation failures (bad values, shapes, configs) and
/// I/O or on-disk format failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("no prior supplied for source `{0}`")]
    MissingPrior(String),

    #[error("vocabulary has no entry for token id {0}")]
    MissingVocab(u32),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("nothing to evaluate: {0}")]
    EmptyEvaluation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("checksum mismatch in {section} section (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum {
        section: String,
        stored: u32,
        computed: u32,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by reading, writing or decoding files.
    pub fn is_io_or_format(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Format(_)
                | Error::Version { .. }
                | Error::Truncated(_)
                | Error::Checksum { .. }
                | Error::Json(_)
        )
    }

    /// Process exit code: 2 for validation errors, 3 for I/O and format errors.
    pub fn exit_code(&self) -> i32 {
        if self.is_io_or_format() {
            3
        } else {
            2
        }
    }
}
