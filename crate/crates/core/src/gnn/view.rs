use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::features::FeatureEncoder;
use super::model::{relations_of, ModelConfig, Relation};
use crate::graph::{HeteroGraph, NodeId};
use crate::nn::{SparseMean, Tensor};
use crate::paths::{PathGraphs, PathKind};

/// Snapshot compiled for message passing: sorted node order, input features,
/// one mean-aggregation operator per non-empty relation, and one per non-empty
/// enabled derived path (bidirectional between user and post).
#[derive(Debug, Clone)]
pub struct GraphView {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    pub features: Tensor,
    pub relations: Vec<(Relation, Arc<SparseMean>)>,
    pub derived: BTreeMap<PathKind, Arc<SparseMean>>,
}

impl GraphView {
    pub fn build(g: &HeteroGraph, paths: Option<&PathGraphs>, config: &ModelConfig) -> Self {
        let mut ids: Vec<NodeId> = g.nodes().iter().map(|n| n.id.clone()).collect();
        ids.sort();
        let index: HashMap<NodeId, usize> = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let n = ids.len();

        let enc = FeatureEncoder::new(config.hash_buckets);
        let mut data = Vec::with_capacity(n * enc.width());
        for id in &ids {
            data.extend(enc.encode(g.node(id).expect("id from graph")));
        }
        let features = Tensor { shape: vec![n, enc.width()], data };

        let mut lists: BTreeMap<Relation, Vec<Vec<usize>>> = BTreeMap::new();
        for e in g.edges() {
            let (s, d) = (index[&e.src], index[&e.dst]);
            let (rs, rd) = relations_of(e, config.stance_typed_relations);
            lists.entry(rs).or_insert_with(|| vec![Vec::new(); n])[s].push(d);
            lists.entry(rd).or_insert_with(|| vec![Vec::new(); n])[d].push(s);
        }
        let relations = lists.into_iter().map(|(r, l)| (r, Arc::new(SparseMean::from_neighbors(n, l)))).collect();

        let mut derived = BTreeMap::new();
        if let Some(pg) = paths {
            for kind in config.paths() {
                let Some(set) = pg.get(kind) else { continue };
                if set.is_empty() {
                    continue;
                }
                let mut l = vec![Vec::new(); n];
                for de in set {
                    let (u, p) = (index[&de.user], index[&de.post]);
                    l[u].push(p);
                    l[p].push(u);
                }
                derived.insert(kind, Arc::new(SparseMean::from_neighbors(n, l)));
            }
        }
        GraphView { ids, index, features, relations, derived }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }
}
