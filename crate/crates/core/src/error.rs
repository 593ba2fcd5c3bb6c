use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    ManifestLine { line: usize, message: String },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("sample id {0:?} appears in both subsets")]
    OverlappingIds(String),

    #[error("frame {frame}: {message}")]
    LandmarkFrame { frame: usize, message: String },

    #[error("landmark track is empty")]
    EmptyTrack,

    #[error("embedding: {0}")]
    Embedding(String),

    #[error("invalid lip index set: {0}")]
    LipIndices(String),

    #[error("invalid lip points: {0}")]
    LipPoints(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no frame has valid landmarks")]
    AllMissing,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("score undefined: {0}")]
    UndefinedScore(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("signal: {0}")]
    Signal(String),

    #[error("frames: {0}")]
    Frames(String),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("sample {id}: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("epoch index {index} out of range (schedule has {total} epochs)")]
    EpochOutOfRange { index: usize, total: usize },

    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_sample(self, id: &str) -> Self {
        Error::Sample {
            id: id.to_string(),
            source: Box::new(self),
        }
    }
}
