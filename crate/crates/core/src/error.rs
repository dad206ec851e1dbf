use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: invalid manifest: {message}", path.display())]
    Manifest { path: PathBuf, message: String },

    #[error("{}:{line}:{field}: non-numeric token {token:?}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        field: usize,
        token: String,
    },

    #[error("{}:{line}: ragged row: expected {expected} fields, found {found}", path.display())]
    Ragged {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{}: empty matrix file", path.display())]
    EmptyMatrix { path: PathBuf },

    #[error("column count mismatch: {} has {found} instances, expected {expected}", path.display())]
    ColumnMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("degenerate view {view}: all entries are zero")]
    DegenerateView { view: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("requested {k} clusters but only {n} instances")]
    TooManyClusters { k: usize, n: usize },

    #[error("view index {index} out of range for {views} views")]
    ViewIndex { index: usize, views: usize },

    #[error("non-finite values encountered in {0}")]
    NonFinite(String),

    #[error("singular row system for cluster factor row {row}")]
    Singular { row: usize },

    #[error("tensor of {entries} entries exceeds the materialization cap of {cap}")]
    SizeCap { entries: usize, cap: usize },

    #[error("partition length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
