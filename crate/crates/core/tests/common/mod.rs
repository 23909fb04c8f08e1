#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stancegraph::gnn::{relations_of, Relation, StanceGnnModel};
use stancegraph::graph::{PostAttrs, UserAttrs};
use stancegraph::paths::PathGraphs;
use stancegraph::{Edge, EdgeKind, HeteroGraph, NodeId, NodeRecord, PathKind, Stance};

pub fn user(id: &str, description: &str) -> NodeRecord {
    NodeRecord::user(
        id,
        UserAttrs { description: description.into(), post_count: 3, account_age_days: 40, verified: false },
    )
}

pub fn post(id: &str, text: &str, misinfo: bool) -> NodeRecord {
    NodeRecord::post(id, PostAttrs { text: text.into(), claim_id: None, is_misinfo: misinfo, created_ts: 100 })
}

pub fn interaction(u: &str, p: &str, kind: EdgeKind, ts: i64, stance: Stance) -> Edge {
    Edge::new(u, p, kind).with_ts(ts).with_stance(stance)
}

/// Knobs for [`random_graph`].
#[derive(Debug, Clone, Copy)]
pub struct RandSpec {
    pub n_users: usize,
    pub n_posts: usize,
    pub p_follow: f64,
    pub p_mention: f64,
    pub interactions_per_user: usize,
    /// Timestamps are drawn from `1..=max_ts`, so small values create ties.
    pub max_ts: i64,
    pub unlabeled_frac: f64,
}

impl Default for RandSpec {
    fn default() -> Self {
        RandSpec {
            n_users: 12,
            n_posts: 6,
            p_follow: 0.15,
            p_mention: 0.05,
            interactions_per_user: 3,
            max_ts: 20,
            unlabeled_frac: 0.0,
        }
    }
}

const WORDS: [&str; 10] = ["vote", "vaccine", "moon", "fraud", "climate", "news", "study", "crowd", "rally", "data"];

fn text(rng: &mut ChaCha8Rng) -> String {
    (0..3).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Random labeled graph with every edge kind represented.
pub fn random_graph(seed: u64, spec: &RandSpec) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = HeteroGraph::new();
    let users: Vec<String> = (0..spec.n_users).map(|i| format!("u{i:02}")).collect();
    let posts: Vec<String> = (0..spec.n_posts).map(|i| format!("p{i:02}")).collect();
    for u in &users {
        let t = text(&mut rng);
        g.add_node(NodeRecord::user(
            u.as_str(),
            UserAttrs {
                description: t,
                post_count: rng.gen_range(0..50),
                account_age_days: rng.gen_range(0..900),
                verified: rng.gen_bool(0.2),
            },
        ))
        .unwrap();
    }
    for p in &posts {
        let t = text(&mut rng);
        g.add_node(NodeRecord::post(
            p.as_str(),
            PostAttrs { text: t, claim_id: None, is_misinfo: rng.gen_bool(0.5), created_ts: rng.gen_range(0..10) },
        ))
        .unwrap();
    }
    for a in &users {
        for b in &users {
            if a == b {
                continue;
            }
            if rng.gen_bool(spec.p_follow) {
                g.add_edge(Edge::new(a.as_str(), b.as_str(), EdgeKind::Follows)).unwrap();
            }
            if rng.gen_bool(spec.p_mention) {
                g.add_edge(Edge::new(a.as_str(), b.as_str(), EdgeKind::Mentions)).unwrap();
            }
        }
    }
    for (i, a) in posts.iter().enumerate() {
        for b in &posts[i + 1..] {
            if rng.gen_bool(0.1) {
                g.add_edge(Edge::new(a.as_str(), b.as_str(), EdgeKind::SameClaim)).unwrap();
            }
            if rng.gen_bool(0.1) {
                g.add_edge(Edge::new(a.as_str(), b.as_str(), EdgeKind::SharedKeyword)).unwrap();
            }
        }
    }
    if !posts.is_empty() {
        let kinds = [EdgeKind::Posts, EdgeKind::Retweets, EdgeKind::Replies, EdgeKind::Quotes];
        for u in &users {
            for _ in 0..spec.interactions_per_user {
                let p = posts.choose(&mut rng).unwrap();
                let kind = *kinds.choose(&mut rng).unwrap();
                let ts = rng.gen_range(1..=spec.max_ts);
                let mut e = Edge::new(u.as_str(), p.as_str(), kind).with_ts(ts);
                if !rng.gen_bool(spec.unlabeled_frac) {
                    e = e.with_stance(*Stance::ALL.choose(&mut rng).unwrap());
                }
                // duplicate (src, dst, kind, ts) draws are simply skipped
                let _ = g.add_edge(e);
            }
        }
    }
    g
}

/// Ten users and four posts in which every derived path is non-empty.
///
/// * u1 supports misinfo p0 and is followed by u0 and u8: FSP links.
/// * u2 opposes misinfo p1 and is followed by u3: FOP link.
/// * u4 and u5 co-engage p2 before u4 supports p0: ESP link (u5, p0).
/// * u6 and u7 co-engage p3 before u6 opposes p1: EOP link (u7, p1).
pub fn fixture_10x4() -> HeteroGraph {
    let mut g = HeteroGraph::new();
    let descriptions = [
        "news reader",
        "vote fraud",
        "fact checker",
        "climate data",
        "moon landing",
        "study crowd",
        "rally news",
        "data study",
        "vaccine news",
        "crowd vote",
    ];
    for (i, d) in descriptions.iter().enumerate() {
        let attrs = UserAttrs {
            description: d.to_string(),
            post_count: 1 + 7 * i as u64,
            account_age_days: 30 + 11 * i as u64,
            verified: i % 4 == 0,
        };
        g.add_node(NodeRecord::user(format!("u{i}"), attrs)).unwrap();
    }
    g.add_node(post("p0", "the vote was stolen by fraud", true)).unwrap();
    g.add_node(post("p1", "vaccine contains a moon chip", true)).unwrap();
    g.add_node(post("p2", "new climate study released", false)).unwrap();
    g.add_node(post("p3", "rally crowd photos", false)).unwrap();

    for (a, b) in [("u0", "u1"), ("u8", "u1"), ("u3", "u2"), ("u9", "u4"), ("u5", "u6"), ("u1", "u7")] {
        g.add_edge(Edge::new(a, b, EdgeKind::Follows)).unwrap();
    }
    g.add_edge(Edge::new("u9", "u0", EdgeKind::Mentions)).unwrap();
    g.add_edge(Edge::new("p0", "p1", EdgeKind::SameClaim)).unwrap();
    g.add_edge(Edge::new("p2", "p3", EdgeKind::SharedKeyword)).unwrap();

    let rows = [
        ("u1", "p0", EdgeKind::Posts, 1, Stance::Support),
        ("u4", "p2", EdgeKind::Replies, 2, Stance::Neutral),
        ("u5", "p2", EdgeKind::Replies, 3, Stance::Neutral),
        ("u6", "p3", EdgeKind::Quotes, 4, Stance::Neutral),
        ("u7", "p3", EdgeKind::Retweets, 5, Stance::Support),
        ("u2", "p1", EdgeKind::Replies, 6, Stance::Oppose),
        ("u4", "p0", EdgeKind::Retweets, 7, Stance::Support),
        ("u6", "p1", EdgeKind::Quotes, 8, Stance::Oppose),
        ("u8", "p2", EdgeKind::Retweets, 9, Stance::Support),
        ("u0", "p0", EdgeKind::Retweets, 10, Stance::Support),
        ("u3", "p1", EdgeKind::Replies, 11, Stance::Oppose),
        ("u9", "p3", EdgeKind::Replies, 12, Stance::Neutral),
    ];
    for (u, p, k, ts, s) in rows {
        g.add_edge(interaction(u, p, k, ts, s)).unwrap();
    }
    g
}

fn param_row(model: &StanceGnnModel, id: stancegraph::nn::ParamId) -> &stancegraph::nn::Tensor {
    model.params.value(id)
}

/// `x · W` for a row vector `x` and a `[d_in, d_out]` matrix, by explicit loops.
pub fn vec_mat(x: &[f64], w: &stancegraph::nn::Tensor) -> Vec<f64> {
    let (r, c) = (w.shape[0], w.shape[1]);
    assert_eq!(x.len(), r);
    (0..c).map(|j| (0..r).map(|i| x[i] * w.data[i * c + j]).sum()).collect()
}

/// Per-path node embeddings computed scalar by scalar from the raw graph.
///
/// Rows follow sorted node id order.
pub fn reference_embeddings(
    g: &HeteroGraph,
    pg: Option<&PathGraphs>,
    model: &StanceGnnModel,
) -> (Vec<NodeId>, BTreeMap<PathKind, Vec<Vec<f64>>>) {
    let mut ids: Vec<NodeId> = g.nodes().iter().map(|n| n.id.clone()).collect();
    ids.sort();
    let pos: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let n = ids.len();
    let x0: Vec<Vec<f64>> = ids.iter().map(|id| model.encoder.encode(g.node(id).unwrap())).collect();

    let mut base: BTreeMap<Relation, Vec<BTreeSet<usize>>> = BTreeMap::new();
    for e in g.edges() {
        let (s, d) = (pos[&e.src], pos[&e.dst]);
        let (rs, rd) = relations_of(e, model.config.stance_typed_relations);
        base.entry(rs).or_insert_with(|| vec![BTreeSet::new(); n])[s].insert(d);
        base.entry(rd).or_insert_with(|| vec![BTreeSet::new(); n])[d].insert(s);
    }

    let mut out = BTreeMap::new();
    for kind in model.config.paths() {
        let mut rels = base.clone();
        if kind != PathKind::Main {
            if let Some(set) = pg.and_then(|pg| pg.get(kind)) {
                let mut l = vec![BTreeSet::new(); n];
                for de in set {
                    let (u, p) = (pos[&de.user], pos[&de.post]);
                    l[u].insert(p);
                    l[p].insert(u);
                }
                rels.insert(Relation::Derived(kind), l);
            }
        }
        let mut h = x0.clone();
        for layer in &model.layers {
            let w_self = param_row(model, layer.w_self);
            let bias = &param_row(model, layer.bias).data;
            let mut next = Vec::with_capacity(n);
            for v in 0..n {
                let mut z = vec_mat(&h[v], w_self);
                for (r, lists) in &rels {
                    let nb = &lists[v];
                    if nb.is_empty() {
                        continue;
                    }
                    let mut mean = vec![0.0; h[v].len()];
                    for &u in nb {
                        for (m, x) in mean.iter_mut().zip(&h[u]) {
                            *m += x;
                        }
                    }
                    mean.iter_mut().for_each(|m| *m /= nb.len() as f64);
                    let msg = vec_mat(&mean, param_row(model, layer.relations[r]));
                    z.iter_mut().zip(&msg).for_each(|(a, b)| *a += b);
                }
                next.push(z.iter().zip(bias).map(|(a, b)| (a + b).max(0.0)).collect());
            }
            h = next;
        }
        out.insert(kind, h);
    }
    (ids, out)
}

/// Softmax over the enabled logits, written out directly.
pub fn reference_weights(model: &StanceGnnModel) -> BTreeMap<PathKind, f64> {
    let logits = model.attention_logits();
    let kinds = model.config.paths();
    let m = kinds.iter().map(|k| logits[k.index()]).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = kinds.iter().map(|k| (logits[k.index()] - m).exp()).sum();
    kinds.iter().map(|k| (*k, (logits[k.index()] - m).exp() / z)).collect()
}

/// `sigmoid(relu([h_u, h_p]·W1 + b1)·W2 + b2)` by explicit loops.
pub fn reference_head(h_user: &[f64], h_post: &[f64], model: &StanceGnnModel) -> f64 {
    let x: Vec<f64> = h_user.iter().chain(h_post).copied().collect();
    let b1 = &model.params.value(model.mlp.b1).data;
    let hidden: Vec<f64> =
        vec_mat(&x, model.params.value(model.mlp.w1)).iter().zip(b1).map(|(a, b)| (a + b).max(0.0)).collect();
    let z = vec_mat(&hidden, model.params.value(model.mlp.w2))[0] + model.params.value(model.mlp.b2).data[0];
    1.0 / (1.0 + (-z).exp())
}

/// Composed reference for `forward_batch`.
pub fn reference_forward(
    g: &HeteroGraph,
    pg: Option<&PathGraphs>,
    model: &StanceGnnModel,
    pairs: &[(NodeId, NodeId)],
) -> Vec<f64> {
    let (ids, emb) = reference_embeddings(g, pg, model);
    let w = reference_weights(model);
    let mixed = |node: &NodeId| -> Vec<f64> {
        let i = ids.binary_search(node).unwrap();
        let d = model.config.d_emb;
        let mut acc = vec![0.0; d];
        for (k, rows) in &emb {
            for (a, x) in acc.iter_mut().zip(&rows[i]) {
                *a += w[k] * x;
            }
        }
        acc
    };
    pairs.iter().map(|(u, p)| reference_head(&mixed(u), &mixed(p), model)).collect()
}

/// Every (user, misinformation post) pair in the graph, sorted.
pub fn user_misinfo_pairs(g: &HeteroGraph) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for u in g.users() {
        for p in g.posts().filter(|p| p.is_misinfo_post()) {
            out.push((u.id.clone(), p.id.clone()));
        }
    }
    out.sort();
    out
}

fn trigger(kind: PathKind) -> Stance {
    match kind {
        PathKind::Fsp | PathKind::Esp => Stance::Support,
        PathKind::Fop | PathKind::Eop => Stance::Oppose,
        PathKind::Main => unreachable!(),
    }
}

/// Distinct intermediaries per derived link, by nested loops over the raw edge list.
pub fn brute_force_intermediaries(
    g: &HeteroGraph,
    kind: PathKind,
    all_posts: bool,
    window: Option<i64>,
) -> BTreeMap<(NodeId, NodeId), BTreeSet<NodeId>> {
    let edges = g.edges();
    let target = |p: &NodeId| all_posts || g.node(p).unwrap().is_misinfo_post();
    let mut out: BTreeMap<(NodeId, NodeId), BTreeSet<NodeId>> = BTreeMap::new();
    for e in edges {
        if !e.kind.is_interaction() || e.stance != Some(trigger(kind)) || !target(&e.dst) {
            continue;
        }
        let (u1, p, t) = (&e.src, &e.dst, e.ts.unwrap());
        match kind {
            PathKind::Fsp | PathKind::Fop => {
                for f in edges {
                    if f.kind == EdgeKind::Follows && &f.dst == u1 {
                        out.entry((f.src.clone(), p.clone())).or_default().insert(u1.clone());
                    }
                }
            }
            _ => {
                let ok = |ts: i64| ts < t && window.is_none_or(|w| ts >= t - w);
                for u2 in g.users() {
                    if &u2.id == u1 {
                        continue;
                    }
                    for p2 in g.posts() {
                        if &p2.id == p {
                            continue;
                        }
                        let engaged = |u: &NodeId| {
                            edges
                                .iter()
                                .any(|x| x.kind.is_interaction() && &x.src == u && x.dst == p2.id && ok(x.ts.unwrap()))
                        };
                        if engaged(u1) && engaged(&u2.id) {
                            out.entry((u2.id.clone(), p.clone())).or_default().insert(u1.clone());
                        }
                    }
                }
            }
        }
    }
    out
}

/// Moves every bias and the attention logits off zero so no pre-activation sits on a ReLU kink.
pub fn nudge_off_zero(model: &mut StanceGnnModel, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<_> = model.layers.iter().map(|l| l.bias).collect();
    ids.extend([model.mlp.b1, model.mlp.b2, model.attention]);
    for id in ids {
        for x in model.params.value_mut(id).data.iter_mut() {
            *x = rng.gen_range(-0.3..0.3);
        }
    }
}

/// Outcome of comparing backward gradients with central differences.
#[derive(Debug, Clone, Copy)]
pub struct GradReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub worst_param: usize,
}

/// Denominator floor so gradients that are zero on both sides compare as equal.
pub const GRAD_FLOOR: f64 = 1e-6;

/// Central differences with step `h` over every scalar parameter of `model`.
pub fn gradient_check(
    view: &stancegraph::gnn::GraphView,
    model: &mut StanceGnnModel,
    users: &[usize],
    posts: &[usize],
    labels: &[f64],
    h: f64,
) -> GradReport {
    model.params.zero_grad();
    stancegraph::gnn::loss_and_backward(view, model, users, posts, labels).unwrap();
    let ids: Vec<_> = model.params.iter().map(|(id, _)| id).collect();
    let mut report = GradReport { checked: 0, max_rel_err: 0.0, worst_param: 0 };
    for (pi, id) in ids.into_iter().enumerate() {
        let analytic = model.params.grad(id).data.clone();
        for (j, a) in analytic.iter().enumerate() {
            let orig = model.params.value(id).data[j];
            model.params.value_mut(id).data[j] = orig + h;
            let up = stancegraph::gnn::loss_only(view, model, users, posts, labels).unwrap();
            model.params.value_mut(id).data[j] = orig - h;
            let down = stancegraph::gnn::loss_only(view, model, users, posts, labels).unwrap();
            model.params.value_mut(id).data[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = pi;
            }
            report.checked += 1;
        }
    }
    report
}

/// Index lists and alternating labels for every (user, misinfo post) pair.
pub fn all_pair_batch(view: &stancegraph::gnn::GraphView, g: &HeteroGraph) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let pairs = user_misinfo_pairs(g);
    let us = pairs.iter().map(|(u, _)| view.index_of(u).unwrap()).collect();
    let ps = pairs.iter().map(|(_, p)| view.index_of(p).unwrap()).collect();
    let ys = (0..pairs.len()).map(|i| ((i * 7 + 3) % 3 == 0) as u8 as f64).collect();
    (us, ps, ys)
}
