use std::path::PathBuf;

use thiserror::Error;

/// Failures raised by a model backend, local or remote.
///
/// Each variant is a distinct class so callers can decide whether a retry
/// makes sense.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0} ms")]
    Timeout(u64),
    #[error("protocol version mismatch: expected {expected}, got {got}")]
    VersionMismatch { expected: String, got: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("gateway rejected request ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("image {0} carries no scene metadata; mock backends need it")]
    MissingMetadata(u64),
    #[error("training failed: {0}")]
    Training(String),
    #[error("unknown training job {0}")]
    UnknownJob(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("box {0:?} lies entirely outside the image")]
    EmptyRegion([f64; 4]),

    #[error("cosine similarity is undefined for a zero vector")]
    UndefinedSimilarity,

    #[error("attribute generation produced no coarse detections over {images} images")]
    EmptyLexicon { images: usize },

    #[error("no image yielded candidate boxes for prompt {prompt:?}")]
    NoCandidates { prompt: String },

    #[error("backend call failed for image {image_id:?}: {source}")]
    Backend {
        image_id: Option<u64>,
        #[source]
        source: BackendError,
    },

    #[error("round {round} failed: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {record}: {message}")]
    Parse { record: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn backend(image_id: Option<u64>, source: BackendError) -> Self {
        Error::Backend { image_id, source }
    }

    /// The backend failure at the root of this error, if any.
    pub fn backend_cause(&self) -> Option<&BackendError> {
        match self {
            Error::Backend { source, .. } => Some(source),
            Error::Round { source, .. } => source.backend_cause(),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
