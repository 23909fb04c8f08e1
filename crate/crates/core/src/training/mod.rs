mod auc;
mod examples;
mod split;
mod train;

pub use auc::compute_auc;
pub use examples::{build_examples, first_propagation, stream_rng, Example};
pub use split::{temporal_split, temporal_split_with, SplitSpec, Window, MIN_SPLIT_EDGES};
pub use train::{evaluate, train, train_with_split, MetricsReport, TrainConfig, WindowAuc, WindowCounts, WindowData};
