use std::path::PathBuf;

use crate::report::TrainingReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("parameter vectors do not share a group layout")]
    LayoutMismatch,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unknown group id `{0}`")]
    UnknownGroup(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        expected: (usize, usize, usize),
        actual: (usize, usize, usize),
    },

    #[error("symbol vector has odd length {0}")]
    OddLength(usize),

    #[error("invalid model spec: {0}")]
    ModelSpec(String),

    #[error("backward called with an incompatible trace: {0}")]
    Trace(&'static str),

    #[error("ingestion failed for {record}: {reason}")]
    Ingestion { record: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    ConfigLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("degenerate local loss {0}: FedLol weights need strictly positive losses")]
    DegenerateLoss(f64),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("training diverged at round {round}, client {client}: loss {loss}")]
    Diverged {
        round: u32,
        client: usize,
        loss: f64,
        partial_report: Box<TrainingReport>,
    },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
