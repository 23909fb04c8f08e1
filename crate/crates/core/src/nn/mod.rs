//! Dense tensors, neighbor-mean aggregation, reverse-mode gradients and Adam.

pub mod params;
pub mod sparse;
pub mod tape;
pub mod tensor;

pub use params::{AdamConfig, Checkpoint, Param, ParamId, ParamStore};
pub use sparse::SparseMean;
pub use tape::{Tape, Var};
pub use tensor::{bce_loss, bce_mean, relu, sigmoid, sigmoid_scalar, softmax, Tensor};
