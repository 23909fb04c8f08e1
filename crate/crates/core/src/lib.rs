//! Stance-aware graph neural network for predicting misinformation propagation.

pub mod error;
pub mod gnn;
pub mod graph;
pub mod nn;
pub mod paths;
pub mod stance;
pub mod synthgen;
pub mod training;

pub use error::{GraphError, NnError, PathError, StanceError, SynthError, TrainError};
pub use gnn::{ModelConfig, StanceGnnModel};
pub use graph::{Edge, EdgeKind, HeteroGraph, NodeId, NodeKind, NodeRecord, Stance};
pub use paths::{PathConfig, PathGraphs, PathKind};
