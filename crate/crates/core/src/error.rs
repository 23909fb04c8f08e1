use std::path::Path;

use thiserror::Error;

use crate::graph::{EdgeKind, NodeKind};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("schema mismatch for node `{id}`: {reason}")]
    SchemaMismatch { id: String, reason: String },
    #[error("edge endpoint `{0}` does not exist")]
    UnknownEndpoint(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{kind} edges cannot connect {src:?} to {dst:?}")]
    KindTypingViolation { kind: EdgeKind, src: NodeKind, dst: NodeKind },
    #[error("interaction edge {src} -> {dst} has no timestamp")]
    MissingTimestamp { src: String, dst: String },
    #[error("stance is only allowed on user-to-post edges, not {0}")]
    IllegalStance(EdgeKind),
    #[error("duplicate edge {src} -> {dst} ({kind}, ts {ts:?})")]
    DuplicateEdge { src: String, dst: String, kind: EdgeKind, ts: Option<i64> },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}:{line}: {source}")]
    AtLine {
        path: String,
        line: usize,
        #[source]
        source: Box<GraphError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GraphError {
    pub(crate) fn at_line(self, path: &Path, line: usize) -> GraphError {
        GraphError::AtLine { path: path.display().to_string(), line, source: Box::new(self) }
    }

    /// Line number for errors raised while loading JSONL files.
    pub fn line(&self) -> Option<usize> {
        match self {
            GraphError::AtLine { line, .. } => Some(*line),
            _ => None,
        }
    }

    /// The underlying error, unwrapping line context.
    pub fn root(&self) -> &GraphError {
        match self {
            GraphError::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Error)]
pub enum StanceError {
    #[error("topic must be non-empty")]
    EmptyTopic,
    #[error("stance scores must be finite, within [0,1] and sum to 1 (got {0:?})")]
    InvalidScore([f64; 3]),
}

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("interaction edge {user} -> {post} on a target post has no stance label")]
    UnlabeledStance { user: String, post: String },
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("backward called without a recorded forward pass")]
    NoForwardRecorded,
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("need at least 10 timestamped interaction edges, found {0}")]
    TooFewEdges(usize),
    #[error("split boundaries collapse onto the same timestamp")]
    DegenerateTimestamps,
    #[error("compute_auc needs both classes present")]
    SingleClass,
    #[error("scores and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("only {available} negative pairs available, {needed} required")]
    NotEnoughNegatives { available: usize, needed: usize },
    #[error("no first propagations fall in the training window ({start}, {end}]; try a larger train_window_frac")]
    NoTrainingPositives { start: i64, end: i64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] PathError),
}
