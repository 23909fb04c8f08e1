mod features;
mod forward;
mod model;
mod view;

pub use features::{FeatureEncoder, TS_SCALE};
pub use forward::{
    attention_aggregate, attention_weights, encode_paths, forward_batch, forward_indices, loss_and_backward, loss_only,
    message_pass_layer, predict_link, PathEmbeddings,
};
pub use model::{
    config_hash, edge_relations, relations_of, LayerParams, MlpParams, ModelConfig, RelDir, Relation, StanceGnnModel,
};
pub use view::GraphView;
