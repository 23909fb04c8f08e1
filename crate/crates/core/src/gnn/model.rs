use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::FeatureEncoder;
use crate::error::NnError;
use crate::graph::{Edge, EdgeKind, Stance};
use crate::nn::{Checkpoint, ParamId, ParamStore, Tensor};
use crate::paths::{PathConfig, PathKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hash_buckets: usize,
    pub d_emb: usize,
    pub n_layers: usize,
    pub mlp_hidden: usize,
    pub enabled_paths: Vec<PathKind>,
    /// Split interaction relations by stance.
    pub stance_typed_relations: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hash_buckets: 256,
            d_emb: 64,
            n_layers: 2,
            mlp_hidden: 64,
            enabled_paths: PathKind::ALL.to_vec(),
            stance_typed_relations: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_layers == 0 {
            return Err("n_layers must be at least 1".into());
        }
        if self.d_emb == 0 || self.mlp_hidden == 0 {
            return Err("d_emb and mlp_hidden must be positive".into());
        }
        if self.enabled_paths.is_empty() {
            return Err("enabled_paths must not be empty".into());
        }
        Ok(())
    }

    /// Enabled paths in canonical order without duplicates.
    pub fn paths(&self) -> Vec<PathKind> {
        PathKind::ALL.into_iter().filter(|k| self.enabled_paths.contains(k)).collect()
    }

    pub fn uses_derived_paths(&self) -> bool {
        self.paths().iter().any(|k| *k != PathKind::Main)
    }
}

/// Short digest of everything that determines model layout and input features.
pub fn config_hash(model: &ModelConfig, paths: &PathConfig) -> String {
    let mut canonical = model.clone();
    canonical.enabled_paths = model.paths();
    let doc = serde_json::json!({ "model": canonical, "paths": paths });
    let digest = Sha256::digest(doc.to_string().as_bytes());
    hex::encode(&digest[..8])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelDir {
    Out,
    In,
    Sym,
}

/// A message-passing relation: an edge kind seen from one side, or a derived path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Edge { kind: EdgeKind, dir: RelDir, stance: Option<Stance> },
    Derived(PathKind),
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Edge { kind, dir, stance } => {
                let d = match dir {
                    RelDir::Out => "out",
                    RelDir::In => "in",
                    RelDir::Sym => "sym",
                };
                write!(f, "{kind}.{d}")?;
                if let Some(s) = stance {
                    write!(f, ".{}", s.as_str())?;
                }
                Ok(())
            }
            Relation::Derived(k) => write!(f, "derived.{k}"),
        }
    }
}

/// Every original-edge relation, independent of which kinds a graph contains.
pub fn edge_relations(stance_typed: bool) -> Vec<Relation> {
    let mut out = Vec::new();
    for kind in EdgeKind::ALL {
        let dirs: &[RelDir] = if kind.is_symmetric() { &[RelDir::Sym] } else { &[RelDir::Out, RelDir::In] };
        for &dir in dirs {
            if stance_typed && kind.is_interaction() {
                for s in Stance::ALL {
                    out.push(Relation::Edge { kind, dir, stance: Some(s) });
                }
            } else {
                out.push(Relation::Edge { kind, dir, stance: None });
            }
        }
    }
    out
}

/// Relations under which `edge.src` aggregates `edge.dst` and vice versa.
pub fn relations_of(edge: &Edge, stance_typed: bool) -> (Relation, Relation) {
    let stance = (stance_typed && edge.kind.is_interaction()).then(|| edge.stance.unwrap_or(Stance::Neutral));
    if edge.kind.is_symmetric() {
        let r = Relation::Edge { kind: edge.kind, dir: RelDir::Sym, stance };
        (r, r)
    } else {
        (
            Relation::Edge { kind: edge.kind, dir: RelDir::Out, stance },
            Relation::Edge { kind: edge.kind, dir: RelDir::In, stance },
        )
    }
}

#[derive(Debug, Clone)]
pub struct LayerParams {
    pub w_self: ParamId,
    pub bias: ParamId,
    pub relations: BTreeMap<Relation, ParamId>,
}

#[derive(Debug, Clone)]
pub struct MlpParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

/// Per-path message passing, attention over path embeddings, and an MLP link head.
#[derive(Debug, Clone)]
pub struct StanceGnnModel {
    pub config: ModelConfig,
    pub encoder: FeatureEncoder,
    pub params: ParamStore,
    pub layers: Vec<LayerParams>,
    pub attention: ParamId,
    pub mlp: MlpParams,
}

impl StanceGnnModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, NnError> {
        config.validate().map_err(NnError::Checkpoint)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = FeatureEncoder::new(config.hash_buckets);
        let mut params = ParamStore::new();
        let mut layers = Vec::with_capacity(config.n_layers);
        let mut relations = edge_relations(config.stance_typed_relations);
        relations.extend(PathKind::DERIVED.map(Relation::Derived));
        for l in 0..config.n_layers {
            let d_in = if l == 0 { encoder.width() } else { config.d_emb };
            let d = config.d_emb;
            let w_self = params.add_glorot(&format!("layer{l}.self"), d_in, d, &mut rng);
            let mut rel_ids = BTreeMap::new();
            for r in &relations {
                rel_ids.insert(*r, params.add_glorot(&format!("layer{l}.{r}"), d_in, d, &mut rng));
            }
            let bias = params.add(&format!("layer{l}.bias"), Tensor::zeros(&[d]));
            layers.push(LayerParams { w_self, bias, relations: rel_ids });
        }
        // equal attention at start
        let attention = params.add("attention.logits", Tensor::zeros(&[PathKind::ALL.len()]));
        let mlp = MlpParams {
            w1: params.add_glorot("mlp.w1", 2 * config.d_emb, config.mlp_hidden, &mut rng),
            b1: params.add("mlp.b1", Tensor::zeros(&[config.mlp_hidden])),
            w2: params.add_glorot("mlp.w2", config.mlp_hidden, 1, &mut rng),
            b2: params.add("mlp.b2", Tensor::zeros(&[1])),
        };
        Ok(StanceGnnModel { config, encoder, params, layers, attention, mlp })
    }

    pub fn from_checkpoint(config: ModelConfig, ck: &Checkpoint) -> Result<Self, NnError> {
        let mut m = StanceGnnModel::new(config, 0)?;
        m.params.load_checkpoint(ck)?;
        Ok(m)
    }

    /// Zero every classifier parameter, making every prediction exactly 0.5.
    pub fn zero_classifier(&mut self) {
        for id in [self.mlp.w1, self.mlp.b1, self.mlp.w2, self.mlp.b2] {
            self.params.value_mut(id).data.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn attention_logits(&self) -> &[f64] {
        &self.params.value(self.attention).data
    }

    pub fn set_attention_logits(&mut self, logits: [f64; 5]) {
        self.params.value_mut(self.attention).data.copy_from_slice(&logits);
    }
}
