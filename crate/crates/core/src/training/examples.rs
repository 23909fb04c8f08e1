use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::split::{SplitSpec, Window};
use crate::error::TrainError;
use crate::graph::{EdgeKind, HeteroGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub user: NodeId,
    pub post: NodeId,
    pub label: u8,
    pub window: Window,
}

/// Earliest propagation timestamp for every (user, misinformation post) pair.
///
/// Propagation edges are user→post interactions. With `count_mentions`, a
/// mention of an author at time `t` also propagates each misinformation post
/// that author published at or before `t`.
pub fn first_propagation(g: &HeteroGraph, count_mentions: bool) -> BTreeMap<(NodeId, NodeId), i64> {
    let mut first: BTreeMap<(NodeId, NodeId), i64> = BTreeMap::new();
    let mut record = |u: &NodeId, p: &NodeId, t: i64| {
        first.entry((u.clone(), p.clone())).and_modify(|x| *x = (*x).min(t)).or_insert(t);
    };
    let misinfo = |p: &NodeId| g.node(p).is_some_and(|n| n.is_misinfo_post());
    for e in g.interaction_edges() {
        if let Some(t) = e.ts {
            if misinfo(&e.dst) {
                record(&e.src, &e.dst, t);
            }
        }
    }
    if count_mentions {
        for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Mentions) {
            let Some(t) = e.ts else { continue };
            for &i in g.out_edges(&e.dst, EdgeKind::Posts) {
                let authored = &g.edges()[i];
                if misinfo(&authored.dst) && authored.ts.is_some_and(|a| a <= t) {
                    record(&e.src, &authored.dst, t);
                }
            }
        }
    }
    first
}

/// Deterministic RNG for one purpose under one seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Labeled (user, misinformation post) pairs for one window.
///
/// Positives are pairs whose first propagation lands inside the window.
/// Negatives are drawn uniformly without replacement from pairs with no
/// propagation at or before the window end, `neg_ratio` per positive.
pub fn build_examples(
    g: &HeteroGraph,
    spec: &SplitSpec,
    window: Window,
    neg_ratio: usize,
    seed: u64,
    count_mentions: bool,
) -> Result<Vec<Example>, TrainError> {
    let (start, end) = spec.bounds(window);
    let first = first_propagation(g, count_mentions);
    let mut out: Vec<Example> = first
        .iter()
        .filter(|(_, &t)| start < t && t <= end)
        .map(|((u, p), _)| Example { user: u.clone(), post: p.clone(), label: 1, window })
        .collect();
    if out.is_empty() {
        return Ok(out);
    }
    let linked: BTreeSet<&(NodeId, NodeId)> = first.iter().filter(|(_, &t)| t <= end).map(|(k, _)| k).collect();
    let mut users: Vec<&NodeId> = g.users().map(|n| &n.id).collect();
    users.sort();
    let mut posts: Vec<&NodeId> = g.posts().filter(|n| n.is_misinfo_post()).map(|n| &n.id).collect();
    posts.sort();
    let mut pool = Vec::new();
    for &u in &users {
        for &p in &posts {
            if !linked.contains(&(u.clone(), p.clone())) {
                pool.push((u, p));
            }
        }
    }
    let needed = neg_ratio * out.len();
    if pool.len() < needed {
        return Err(TrainError::NotEnoughNegatives { available: pool.len(), needed });
    }
    let mut rng = stream_rng(seed, window as u64);
    let mut picked = index::sample(&mut rng, pool.len(), needed).into_vec();
    picked.sort_unstable();
    out.extend(picked.into_iter().map(|i| Example {
        user: pool[i].0.clone(),
        post: pool[i].1.clone(),
        label: 0,
        window,
    }));
    out.shuffle(&mut rng);
    Ok(out)
}
