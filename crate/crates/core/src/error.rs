use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt data: {0}")]
    CorruptData(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("window of side {side} does not fit a {width}x{height} image")]
    WindowTooLarge {
        side: usize,
        width: usize,
        height: usize,
    },
    #[error("degenerate histogram: image has a single intensity level")]
    DegenerateHistogram,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("dataset layout not recognized under {}", .0.display())]
    LayoutNotRecognized(PathBuf),
    #[error("missing image for id {id}: {}", path.display())]
    MissingImage { id: String, path: PathBuf },
    #[error("duplicate image id: {0}")]
    DuplicateId(String),
    #[error("feature join mismatch: {0}")]
    FeatureJoinMismatch(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("ragged rows: line {line} has {found} values, expected {expected}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Parameter errors are the caller's fault; everything else is a
    /// problem with the data on disk or in memory.
    pub fn is_usage_error(&self) -> bool {
        matches!(self, Error::InvalidParams(_))
    }
}
