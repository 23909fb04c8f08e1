use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::graph::HeteroGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Train,
    Val,
    Test,
}

impl Window {
    pub const ALL: [Window; 3] = [Window::Train, Window::Val, Window::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Window::Train => "train",
            Window::Val => "val",
            Window::Test => "test",
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Window::Train),
            "val" => Ok(Window::Val),
            "test" => Ok(Window::Test),
            other => Err(format!("unknown window `{other}` (expected train, val or test)")),
        }
    }
}

/// Temporal boundaries over interaction timestamps.
///
/// Each window is the half-open interval `(start, end]`; the model predicting a
/// window only ever sees the graph as of its start. The training window
/// `(t_train_start, t_train_end]` by default holds the last tenth of edges
/// before `t_train_end`, so all three windows span the same share of interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub t_train_start: i64,
    pub t_train_end: i64,
    pub t_val_end: i64,
    pub t_test_end: i64,
}

impl SplitSpec {
    pub fn bounds(&self, w: Window) -> (i64, i64) {
        match w {
            Window::Train => (self.t_train_start, self.t_train_end),
            Window::Val => (self.t_train_end, self.t_val_end),
            Window::Test => (self.t_val_end, self.t_test_end),
        }
    }

    pub fn start(&self, w: Window) -> i64 {
        self.bounds(w).0
    }
}

pub const MIN_SPLIT_EDGES: usize = 10;

// the ceil(q·n)-th smallest value, with q = num / den
fn quantile(sorted: &[i64], num: usize, den: usize) -> i64 {
    let k = (num * sorted.len()).div_ceil(den);
    sorted[k.max(1) - 1]
}

/// Split interaction edges 8:1:1 by timestamp, with the training labels taken
/// from the last tenth of edges before the validation window.
/// Edges tied with a boundary fall into the earlier window.
pub fn temporal_split(g: &HeteroGraph) -> Result<SplitSpec, TrainError> {
    temporal_split_with(g, 0.1)
}

/// As [`temporal_split`], with the training label window covering
/// `train_window_frac` of all interaction edges (in `(0, 0.8)`).
pub fn temporal_split_with(g: &HeteroGraph, train_window_frac: f64) -> Result<SplitSpec, TrainError> {
    if !(train_window_frac > 0.0 && train_window_frac < 0.8) {
        return Err(TrainError::Config(format!("train_window_frac must lie in (0, 0.8), got {train_window_frac}")));
    }
    let mut ts: Vec<i64> = g.interaction_edges().filter_map(|e| e.ts).collect();
    if ts.len() < MIN_SPLIT_EDGES {
        return Err(TrainError::TooFewEdges(ts.len()));
    }
    ts.sort_unstable();
    const DEN: usize = 1000;
    let start = DEN * 8 / 10 - (train_window_frac * DEN as f64).round() as usize;
    let spec = SplitSpec {
        t_train_start: quantile(&ts, start.max(1), DEN),
        t_train_end: quantile(&ts, 8, 10),
        t_val_end: quantile(&ts, 9, 10),
        t_test_end: ts[ts.len() - 1],
    };
    if !(spec.t_train_start < spec.t_train_end && spec.t_train_end < spec.t_val_end && spec.t_val_end < spec.t_test_end)
    {
        return Err(TrainError::DegenerateTimestamps);
    }
    Ok(spec)
}
