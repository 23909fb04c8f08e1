//! Reverse-mode differentiation over the small op set the GNN needs.
//!
//! Each op appends a node holding its forward value. [`Tape::backward`]
//! walks the nodes in reverse and accumulates parameter gradients into the
//! [`ParamStore`].

use std::sync::Arc;

use super::params::{ParamId, ParamStore};
use super::sparse::SparseMean;
use super::tensor::{self, Tensor, BCE_EPS, SIGMOID_CLAMP};
use crate::error::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    Sum(Vec<Var>),
    AddRow(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Aggregate(Arc<SparseMean>, Var),
    Gather(Var, Vec<usize>),
    Pick(Var, Vec<usize>),
    Concat(Var, Var),
    Softmax(Var),
    Mix(Var, Vec<Var>),
    BceMean(Var, Vec<f64>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> NnError {
    NnError::ShapeMismatch { op, left: a.shape.clone(), right: b.shape.clone() }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Constant input; no gradient flows into it.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Input, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id), true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let v = self.value(a).matmul(self.value(b))?;
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(v, Op::MatMul(a, b), g))
    }

    pub fn sum(&mut self, parts: &[Var]) -> Result<Var, NnError> {
        let (first, rest) = parts.split_first().expect("sum of at least one term");
        let mut acc = self.value(*first).clone();
        for &p in rest {
            if self.value(p).shape != acc.shape {
                return Err(mismatch("sum", &acc, self.value(p)));
            }
            acc.add_assign(self.value(p));
        }
        let g = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(acc, Op::Sum(parts.to_vec()), g))
    }

    /// `x + bias` with `bias` broadcast over rows.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var, NnError> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if xv.cols() != bv.len() {
            return Err(mismatch("add_row", xv, bv));
        }
        let c = xv.cols();
        let mut out = xv.clone();
        for (i, o) in out.data.iter_mut().enumerate() {
            *o += bv.data[i % c];
        }
        let g = self.needs(x) || self.needs(bias);
        Ok(self.push(out, Op::AddRow(x, bias), g))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = tensor::relu(self.value(x));
        let g = self.needs(x);
        self.push(v, Op::Relu(x), g)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).sigmoid();
        let g = self.needs(x);
        self.push(v, Op::Sigmoid(x), g)
    }

    /// Per-row neighbor mean.
    pub fn aggregate(&mut self, adj: &Arc<SparseMean>, x: Var) -> Var {
        let v = adj.apply(self.value(x));
        let g = self.needs(x);
        self.push(v, Op::Aggregate(Arc::clone(adj), x), g)
    }

    pub fn gather_rows(&mut self, x: Var, rows: &[usize]) -> Var {
        let xv = self.value(x);
        let c = xv.cols();
        let mut data = Vec::with_capacity(rows.len() * c);
        for &r in rows {
            data.extend_from_slice(xv.row(r));
        }
        let v = Tensor { shape: vec![rows.len(), c], data };
        let g = self.needs(x);
        self.push(v, Op::Gather(x, rows.to_vec()), g)
    }

    /// Flat element selection into a rank-1 tensor.
    pub fn pick(&mut self, x: Var, idx: &[usize]) -> Var {
        let v = Tensor::vector(idx.iter().map(|&i| self.value(x).data[i]).collect());
        let g = self.needs(x);
        self.push(v, Op::Pick(x, idx.to_vec()), g)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() {
            return Err(mismatch("concat_cols", av, bv));
        }
        let (ca, cb) = (av.cols(), bv.cols());
        let mut data = Vec::with_capacity(av.len() + bv.len());
        for r in 0..av.rows() {
            data.extend_from_slice(av.row(r));
            data.extend_from_slice(bv.row(r));
        }
        let v = Tensor { shape: vec![av.rows(), ca + cb], data };
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(v, Op::Concat(a, b), g))
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let v = tensor::softmax(self.value(x));
        let g = self.needs(x);
        self.push(v, Op::Softmax(x), g)
    }

    /// `Σ_k weights[k] · parts[k]`.
    pub fn mix(&mut self, weights: Var, parts: &[Var]) -> Result<Var, NnError> {
        let w = self.value(weights).data.clone();
        if w.len() != parts.len() || parts.is_empty() {
            return Err(NnError::ShapeMismatch { op: "mix", left: vec![w.len()], right: vec![parts.len()] });
        }
        let mut acc = Tensor::zeros_like(self.value(parts[0]));
        for (k, &p) in parts.iter().enumerate() {
            let pv = self.value(p);
            if pv.shape != acc.shape {
                return Err(mismatch("mix", &acc, pv));
            }
            for (a, x) in acc.data.iter_mut().zip(&pv.data) {
                *a += w[k] * x;
            }
        }
        let g = self.needs(weights) || parts.iter().any(|&p| self.needs(p));
        Ok(self.push(acc, Op::Mix(weights, parts.to_vec()), g))
    }

    /// Mean binary cross-entropy of probabilities `p` against `labels`, clamped at `BCE_EPS`.
    pub fn bce_mean(&mut self, p: Var, labels: &[f64]) -> Result<Var, NnError> {
        let pv = self.value(p);
        if pv.len() != labels.len() {
            return Err(NnError::ShapeMismatch { op: "bce_mean", left: pv.shape.clone(), right: vec![labels.len()] });
        }
        let loss = tensor::bce_mean(&pv.data, labels);
        let g = self.needs(p);
        Ok(self.push(Tensor::scalar(loss), Op::BceMean(p, labels.to_vec()), g))
    }

    /// Backpropagate from a scalar `loss`, adding parameter gradients into `store`.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<(), NnError> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(NnError::NoForwardRecorded);
        }
        if self.value(loss).len() != 1 {
            return Err(NnError::ShapeMismatch {
                op: "backward",
                left: self.value(loss).shape.clone(),
                right: vec![1],
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let send = |v: Var, t: Tensor, grads: &mut Vec<Option<Tensor>>| {
                if !self.nodes[v.0].needs_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.add_assign(&t),
                    slot => *slot = Some(t),
                }
            };
            match &node.op {
                Op::Input => {}
                Op::Param(id) => store.accumulate_grad(*id, &g),
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        send(*a, g.matmul_t(self.value(*b)), &mut grads);
                    }
                    if self.needs(*b) {
                        send(*b, self.value(*a).t_matmul(&g), &mut grads);
                    }
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        send(p, g.clone(), &mut grads);
                    }
                }
                Op::AddRow(x, b) => {
                    let c = g.cols();
                    let mut gb = Tensor::zeros_like(self.value(*b));
                    for (j, v) in g.data.iter().enumerate() {
                        gb.data[j % c] += v;
                    }
                    send(*b, gb, &mut grads);
                    send(*x, g, &mut grads);
                }
                Op::Relu(x) => {
                    let xv = self.value(*x);
                    let d = Tensor {
                        shape: g.shape.clone(),
                        data: g.data.iter().zip(&xv.data).map(|(g, x)| if *x > 0.0 { *g } else { 0.0 }).collect(),
                    };
                    send(*x, d, &mut grads);
                }
                Op::Sigmoid(x) => {
                    let (xv, s) = (self.value(*x), &node.value);
                    let data = g
                        .data
                        .iter()
                        .zip(&s.data)
                        .zip(&xv.data)
                        .map(|((g, s), x)| if x.abs() < SIGMOID_CLAMP { g * s * (1.0 - s) } else { 0.0 })
                        .collect();
                    send(*x, Tensor { shape: g.shape.clone(), data }, &mut grads);
                }
                Op::Aggregate(adj, x) => send(*x, adj.apply_transpose(&g), &mut grads),
                Op::Gather(x, rows) => {
                    let mut d = Tensor::zeros_like(self.value(*x));
                    let c = d.cols();
                    for (k, &r) in rows.iter().enumerate() {
                        for j in 0..c {
                            d.data[r * c + j] += g.data[k * c + j];
                        }
                    }
                    send(*x, d, &mut grads);
                }
                Op::Pick(x, idx) => {
                    let mut d = Tensor::zeros_like(self.value(*x));
                    for (k, &i) in idx.iter().enumerate() {
                        d.data[i] += g.data[k];
                    }
                    send(*x, d, &mut grads);
                }
                Op::Concat(a, b) => {
                    let (ca, cb) = (self.value(*a).cols(), self.value(*b).cols());
                    let rows = g.rows();
                    let mut ga = Vec::with_capacity(rows * ca);
                    let mut gb = Vec::with_capacity(rows * cb);
                    for r in 0..rows {
                        let row = g.row(r);
                        ga.extend_from_slice(&row[..ca]);
                        gb.extend_from_slice(&row[ca..]);
                    }
                    send(*a, Tensor { shape: self.value(*a).shape.clone(), data: ga }, &mut grads);
                    send(*b, Tensor { shape: self.value(*b).shape.clone(), data: gb }, &mut grads);
                }
                Op::Softmax(x) => {
                    let y = &node.value;
                    let gy = g.dot(y);
                    let data = y.data.iter().zip(&g.data).map(|(y, g)| y * (g - gy)).collect();
                    send(*x, Tensor { shape: y.shape.clone(), data }, &mut grads);
                }
                Op::Mix(w, parts) => {
                    let wv = self.value(*w);
                    if self.needs(*w) {
                        let dw = parts.iter().map(|&p| self.value(p).dot(&g)).collect();
                        send(*w, Tensor { shape: wv.shape.clone(), data: dw }, &mut grads);
                    }
                    for (k, &p) in parts.iter().enumerate() {
                        if self.needs(p) {
                            send(p, g.scale(wv.data[k]), &mut grads);
                        }
                    }
                }
                Op::BceMean(p, labels) => {
                    let pv = self.value(*p);
                    let n = labels.len().max(1) as f64;
                    let data = pv
                        .data
                        .iter()
                        .zip(labels)
                        .map(|(&p, &y)| {
                            if p <= BCE_EPS || p >= 1.0 - BCE_EPS {
                                0.0
                            } else {
                                g.data[0] * (-y / p + (1.0 - y) / (1.0 - p)) / n
                            }
                        })
                        .collect();
                    send(*p, Tensor { shape: pv.shape.clone(), data }, &mut grads);
                }
            }
        }
        Ok(())
    }
}
