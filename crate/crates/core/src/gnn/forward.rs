//! Forward computation: per-path message passing, attention mixing, link head.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::model::{LayerParams, StanceGnnModel};
use super::view::GraphView;
use crate::error::NnError;
use crate::graph::NodeId;
use crate::nn::{softmax, ParamId, SparseMean, Tape, Tensor, Var};
use crate::paths::PathKind;

/// Tape variables for every model parameter, indexed by `ParamId`.
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn new(tape: &mut Tape, model: &StanceGnnModel) -> Self {
        let vars = model.params.iter().map(|(id, _)| tape.param(&model.params, id)).collect();
        Bound { vars }
    }

    pub fn get(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }
}

/// `W_self·H + Σ_r mean_r(H)·W_r + b` before the nonlinearity, over the original relations.
fn layer_base(tape: &mut Tape, p: &Bound, layer: &LayerParams, view: &GraphView, h: Var) -> Result<Var, NnError> {
    let mut terms = vec![tape.matmul(h, p.get(layer.w_self))?];
    for (rel, adj) in &view.relations {
        let w = p.get(layer.relations[rel]);
        let t = tape.matmul(h, w)?;
        terms.push(tape.aggregate(adj, t));
    }
    let s = tape.sum(&terms)?;
    tape.add_row(s, p.get(layer.bias))
}

fn add_derived(
    tape: &mut Tape,
    p: &Bound,
    layer: &LayerParams,
    kind: PathKind,
    adj: &Arc<SparseMean>,
    h: Var,
    base: Var,
) -> Result<Var, NnError> {
    let w = p.get(layer.relations[&super::model::Relation::Derived(kind)]);
    let t = tape.matmul(h, w)?;
    let m = tape.aggregate(adj, t);
    tape.sum(&[base, m])
}

/// Node embeddings for every enabled path, in canonical path order.
///
/// A derived path whose edge set is empty reuses the `Main` embedding.
pub fn encode_on_tape(
    tape: &mut Tape,
    p: &Bound,
    view: &GraphView,
    model: &StanceGnnModel,
) -> Result<Vec<(PathKind, Var)>, NnError> {
    let x = tape.input(view.features.clone());
    if x_width(tape, x) != model.encoder.width() {
        return Err(NnError::ShapeMismatch {
            op: "encode",
            left: tape.value(x).shape.clone(),
            right: vec![view.node_count(), model.encoder.width()],
        });
    }
    let kinds = model.config.paths();
    let active: Vec<PathKind> =
        kinds.iter().copied().filter(|k| *k != PathKind::Main && view.derived.contains_key(k)).collect();
    // hidden state per distinct view: Main plus each active derived path
    let mut main_h = x;
    let mut path_h: BTreeMap<PathKind, Var> = active.iter().map(|k| (*k, x)).collect();
    for (l, layer) in model.layers.iter().enumerate() {
        let main_base = layer_base(tape, p, layer, view, main_h)?;
        let mut next = BTreeMap::new();
        for &k in &active {
            let h = path_h[&k];
            // the first layer sees identical input on every view, so the base is shared
            let base = if l == 0 { main_base } else { layer_base(tape, p, layer, view, h)? };
            let z = add_derived(tape, p, layer, k, &view.derived[&k], h, base)?;
            next.insert(k, tape.relu(z));
        }
        main_h = tape.relu(main_base);
        path_h = next;
    }
    Ok(kinds.into_iter().map(|k| (k, path_h.get(&k).copied().unwrap_or(main_h))).collect())
}

fn x_width(tape: &Tape, x: Var) -> usize {
    tape.value(x).cols()
}

/// Attention-weighted sum of path embeddings; softmax over enabled logits only.
pub fn mix_on_tape(
    tape: &mut Tape,
    p: &Bound,
    model: &StanceGnnModel,
    embeds: &[(PathKind, Var)],
) -> Result<Var, NnError> {
    let idx: Vec<usize> = embeds.iter().map(|(k, _)| k.index()).collect();
    let logits = tape.pick(p.get(model.attention), &idx);
    let w = tape.softmax(logits);
    let parts: Vec<Var> = embeds.iter().map(|(_, v)| *v).collect();
    tape.mix(w, &parts)
}

/// `sigmoid(MLP([h_u ⊕ h_p]))` for each (user row, post row) pair; returns a `[B, 1]` var.
pub fn head_on_tape(
    tape: &mut Tape,
    p: &Bound,
    model: &StanceGnnModel,
    h: Var,
    users: &[usize],
    posts: &[usize],
) -> Result<Var, NnError> {
    let hu = tape.gather_rows(h, users);
    let hp = tape.gather_rows(h, posts);
    let z = tape.concat_cols(hu, hp)?;
    head_from_concat(tape, p, model, z)
}

fn head_from_concat(tape: &mut Tape, p: &Bound, model: &StanceGnnModel, z: Var) -> Result<Var, NnError> {
    let a = tape.matmul(z, p.get(model.mlp.w1))?;
    let a = tape.add_row(a, p.get(model.mlp.b1))?;
    let a = tape.relu(a);
    let o = tape.matmul(a, p.get(model.mlp.w2))?;
    let o = tape.add_row(o, p.get(model.mlp.b2))?;
    Ok(tape.sigmoid(o))
}

fn resolve(view: &GraphView, pairs: &[(NodeId, NodeId)]) -> Result<(Vec<usize>, Vec<usize>), NnError> {
    let mut us = Vec::with_capacity(pairs.len());
    let mut ps = Vec::with_capacity(pairs.len());
    for (u, p) in pairs {
        us.push(view.index_of(u).ok_or_else(|| NnError::UnknownNode(u.to_string()))?);
        ps.push(view.index_of(p).ok_or_else(|| NnError::UnknownNode(p.to_string()))?);
    }
    Ok((us, ps))
}

/// Full forward pass recorded on `tape`, returning the `[B, 1]` probability var.
pub fn forward_on_tape(
    tape: &mut Tape,
    view: &GraphView,
    model: &StanceGnnModel,
    users: &[usize],
    posts: &[usize],
) -> Result<(Bound, Var), NnError> {
    let p = Bound::new(tape, model);
    let embeds = encode_on_tape(tape, &p, view, model)?;
    let h = mix_on_tape(tape, &p, model, &embeds)?;
    let probs = head_on_tape(tape, &p, model, h, users, posts)?;
    Ok((p, probs))
}

/// Mean BCE over `(user, post, label)` examples; gradients go into `model.params`.
pub fn loss_and_backward(
    view: &GraphView,
    model: &mut StanceGnnModel,
    users: &[usize],
    posts: &[usize],
    labels: &[f64],
) -> Result<f64, NnError> {
    let mut tape = Tape::new();
    let (_, probs) = forward_on_tape(&mut tape, view, model, users, posts)?;
    let loss = tape.bce_mean(probs, labels)?;
    tape.backward(loss, &mut model.params)?;
    Ok(tape.value(loss).data[0])
}

/// Mean BCE without gradients.
pub fn loss_only(
    view: &GraphView,
    model: &StanceGnnModel,
    users: &[usize],
    posts: &[usize],
    labels: &[f64],
) -> Result<f64, NnError> {
    let mut tape = Tape::new();
    let (_, probs) = forward_on_tape(&mut tape, view, model, users, posts)?;
    let loss = tape.bce_mean(probs, labels)?;
    Ok(tape.value(loss).data[0])
}

/// Propagation probability for each (user, post) pair.
pub fn forward_batch(
    view: &GraphView,
    model: &StanceGnnModel,
    pairs: &[(NodeId, NodeId)],
) -> Result<Vec<f64>, NnError> {
    let (us, ps) = resolve(view, pairs)?;
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    forward_indices(view, model, &us, &ps)
}

pub fn forward_indices(
    view: &GraphView,
    model: &StanceGnnModel,
    users: &[usize],
    posts: &[usize],
) -> Result<Vec<f64>, NnError> {
    let mut tape = Tape::new();
    let (_, probs) = forward_on_tape(&mut tape, view, model, users, posts)?;
    Ok(tape.value(probs).data.clone())
}

/// Node embeddings per enabled path.
#[derive(Debug, Clone)]
pub struct PathEmbeddings {
    ids: Vec<NodeId>,
    pub by_path: BTreeMap<PathKind, Tensor>,
}

impl PathEmbeddings {
    pub fn row(&self, kind: PathKind, node: &NodeId) -> Option<&[f64]> {
        let i = self.ids.binary_search(node).ok()?;
        self.by_path.get(&kind).map(|t| t.row(i))
    }

    pub fn len(&self) -> usize {
        self.by_path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_path.is_empty()
    }
}

pub fn encode_paths(view: &GraphView, model: &StanceGnnModel) -> Result<PathEmbeddings, NnError> {
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, model);
    let embeds = encode_on_tape(&mut tape, &p, view, model)?;
    Ok(PathEmbeddings {
        ids: view.ids().to_vec(),
        by_path: embeds.into_iter().map(|(k, v)| (k, tape.value(v).clone())).collect(),
    })
}

/// `h' = Σ_k w_k · h_k(node)` with `w = softmax` over the logits of the paths present in `pe`.
pub fn attention_aggregate(pe: &PathEmbeddings, logits: &[f64], node: &NodeId) -> Result<Vec<f64>, NnError> {
    let kinds: Vec<PathKind> = pe.by_path.keys().copied().collect();
    let w = softmax(&Tensor::vector(kinds.iter().map(|k| logits[k.index()]).collect()));
    let mut out: Option<Vec<f64>> = None;
    for (k, wk) in kinds.iter().zip(&w.data) {
        let row = pe.row(*k, node).ok_or_else(|| NnError::UnknownNode(node.to_string()))?;
        let acc = out.get_or_insert_with(|| vec![0.0; row.len()]);
        for (a, x) in acc.iter_mut().zip(row) {
            *a += wk * x;
        }
    }
    out.ok_or_else(|| NnError::UnknownNode(node.to_string()))
}

/// Link probability from aggregated user and post embeddings.
pub fn predict_link(h_user: &[f64], h_post: &[f64], model: &StanceGnnModel) -> Result<f64, NnError> {
    let d = model.config.d_emb;
    if h_user.len() != d || h_post.len() != d {
        return Err(NnError::ShapeMismatch {
            op: "predict_link",
            left: vec![h_user.len(), h_post.len()],
            right: vec![d, d],
        });
    }
    let mut tape = Tape::new();
    let p = Bound::new(&mut tape, model);
    let z = tape.input(Tensor::matrix(1, 2 * d, [h_user, h_post].concat())?);
    let probs = head_from_concat(&mut tape, &p, model, z)?;
    Ok(tape.value(probs).data[0])
}

/// Effective attention weights in `[main, fsp, fop, esp, eop]` order.
/// Disabled paths report zero; enabled weights sum to one.
pub fn attention_weights(model: &StanceGnnModel) -> [f64; 5] {
    let logits = model.attention_logits();
    let kinds = model.config.paths();
    let w = softmax(&Tensor::vector(kinds.iter().map(|k| logits[k.index()]).collect()));
    let mut out = [0.0; 5];
    for (k, v) in kinds.iter().zip(&w.data) {
        out[k.index()] = *v;
    }
    out
}

/// One message-passing layer over explicit relation operators and weights.
///
/// For each node `v`: `ReLU(H[v]·W_self + Σ_r mean_{u ∈ N_r(v)} H[u]·W_r + b)`.
pub fn message_pass_layer(
    relations: &[(Arc<SparseMean>, Tensor)],
    h: &Tensor,
    w_self: &Tensor,
    bias: &Tensor,
) -> Result<Tensor, NnError> {
    let mut tape = Tape::new();
    let hv = tape.input(h.clone());
    let ws = tape.input(w_self.clone());
    let mut terms = vec![tape.matmul(hv, ws)?];
    for (adj, w) in relations {
        if adj.n_rows() != h.rows() {
            return Err(NnError::ShapeMismatch {
                op: "message_pass_layer",
                left: vec![adj.n_rows()],
                right: h.shape.clone(),
            });
        }
        let wv = tape.input(w.clone());
        let t = tape.matmul(hv, wv)?;
        terms.push(tape.aggregate(adj, t));
    }
    let s = tape.sum(&terms)?;
    let b = tape.input(bias.clone());
    let z = tape.add_row(s, b)?;
    let out = tape.relu(z);
    Ok(tape.value(out).clone())
}
