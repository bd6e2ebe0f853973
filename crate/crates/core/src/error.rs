use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed capture: {0}")]
    MalformedCapture(String),
    #[error("unsupported link type {0}")]
    UnsupportedLinkType(u32),
    #[error("session contains no matching packets")]
    EmptySession,
    #[error("cannot infer direction between {src} and {dst}")]
    AmbiguousDirection { src: String, dst: String },
    #[error("CSV header mismatch: expected `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("row {row}: {reason}")]
    RowParse { row: usize, reason: String },
    #[error("session `{session_id}` has {count} packet(s), at least 2 required")]
    MinPacketsNotMet { session_id: String, count: usize },
    #[error("session `{0}` has no label")]
    UnlabeledSession(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid histogram range [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },
    #[error("no values to bin")]
    EmptyValues,
    #[error("histograms have different bin edges")]
    EdgeMismatch,
    #[error("dataset contains a single class")]
    SingleClassDataset,
    #[error("index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },
    #[error("arity mismatch: expected {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("feature `{0}` required by the model is missing")]
    MissingFeature(String),
    #[error("class {label} has {count} row(s), at least 2 required for cross-validation")]
    TooFewSamples { label: String, count: usize },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("length mismatch: {truth} truths vs {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("distribution {0} produced no valid sample after 1000 attempts")]
    DegenerateProfile(String),
    #[error("frame of {0} bytes cannot carry Ethernet/IPv4/TCP headers (54 bytes)")]
    FrameTooSmall(u32),
    #[error("frame of {0} bytes exceeds the IPv4 total length field")]
    FrameTooLarge(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
