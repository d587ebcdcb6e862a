//! Library-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing manifest at {0}")]
    MissingManifest(PathBuf),

    #[error("invalid corpus record {recording_id}: {message}")]
    InvalidRecord { recording_id: String, message: String },

    #[error("unknown tier {0:?}")]
    UnknownTier(String),

    #[error("unknown label {label:?} in tier {tier}")]
    UnknownLabel { tier: String, label: String },

    #[error("prevalence for {label} is {value}, must be in [0, 1]")]
    PrevalenceOutOfRange { label: String, value: f64 },

    #[error("no positive frames for scope gesture_frames")]
    NoPositiveFrames,

    #[error("audio too short: {n_samples} samples, need at least {window} for one window")]
    AudioTooShort { n_samples: usize, window: usize },

    #[error("feature/grid length mismatch for {recording_id}: features {features} frames, grid {grid} frames")]
    LengthMismatch {
        recording_id: String,
        features: usize,
        grid: usize,
    },

    #[error("cannot split {n_speakers} speakers into {k} folds")]
    TooManyFolds { k: usize, n_speakers: usize },

    #[error("window too small: receptive field {receptive_field} frames exceeds window of {window} frames")]
    WindowTooSmall { receptive_field: usize, window: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("incompatible checkpoint: expected spec hash {expected}, file has {got}")]
    IncompatibleCheckpoint { expected: String, got: String },

    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),

    #[error("numerical overflow in layer {0}")]
    NumericalOverflow(usize),

    #[error("text embedding failed at token {token_index}: {message}")]
    EmbeddingFailed { token_index: usize, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
