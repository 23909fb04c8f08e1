use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    m: Tensor,
    v: Tensor,
}

/// Named parameters with gradients and Adam moment estimates.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    by_name: BTreeMap<String, ParamId>,
    step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> ParamId {
        assert!(!self.by_name.contains_key(name), "parameter `{name}` registered twice");
        let id = ParamId(self.params.len());
        self.params.push(Param {
            name: name.to_string(),
            grad: Tensor::zeros_like(&value),
            m: Tensor::zeros_like(&value),
            v: Tensor::zeros_like(&value),
            value,
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// Glorot-uniform matrix in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn add_glorot(&mut self, name: &str, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> ParamId {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..=bound)).collect();
        self.add(name, Tensor { shape: vec![fan_in, fan_out], data })
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, g: &Tensor) {
        self.params[id.0].grad.add_assign(g);
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// One bias-corrected Adam update over every parameter, then zero the gradients.
    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for p in &mut self.params {
            for i in 0..p.value.data.len() {
                let g = p.grad.data[i];
                let m = cfg.beta1 * p.m.data[i] + (1.0 - cfg.beta1) * g;
                let v = cfg.beta2 * p.v.data[i] + (1.0 - cfg.beta2) * g * g;
                p.m.data[i] = m;
                p.v.data[i] = v;
                p.value.data[i] -= cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
                p.grad.data[i] = 0.0;
            }
        }
    }

    /// Copy parameter values (not optimizer state) from another store with the same layout.
    pub fn copy_values_from(&mut self, other: &ParamStore) {
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            debug_assert_eq!(dst.name, src.name);
            dst.value = src.value.clone();
        }
    }

    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint {
        Checkpoint {
            version: 1,
            params: self.params.iter().map(|p| (p.name.clone(), p.value.clone())).collect(),
            step: self.step,
            config_hash: config_hash.to_string(),
        }
    }

    /// Load values from a checkpoint; every parameter must be present with its exact shape.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<(), NnError> {
        if ck.version != 1 {
            return Err(NnError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        if ck.params.len() != self.params.len() {
            return Err(NnError::Checkpoint(format!(
                "checkpoint has {} parameters, model expects {}",
                ck.params.len(),
                self.params.len()
            )));
        }
        for p in &mut self.params {
            let t = ck.params.get(&p.name).ok_or_else(|| NnError::UnknownParam(p.name.clone()))?;
            if t.shape != p.value.shape || t.data.len() != p.value.data.len() {
                return Err(NnError::ShapeMismatch {
                    op: "load_checkpoint",
                    left: p.value.shape.clone(),
                    right: t.shape.clone(),
                });
            }
            if !t.all_finite() {
                return Err(NnError::Checkpoint(format!("non-finite values in `{}`", p.name)));
            }
            p.value = t.clone();
        }
        self.step = ck.step;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub params: BTreeMap<String, Tensor>,
    pub step: u64,
    pub config_hash: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::vector(vec![1.0, -2.0]));
        s.adam_step(&AdamConfig::default());
        assert_eq!(s.value(id).data, vec![1.0, -2.0]);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::vector(vec![0.0, 0.0]));
        s.accumulate_grad(id, &Tensor::vector(vec![3.0, -0.5]));
        let cfg = AdamConfig { lr: 0.01, ..Default::default() };
        s.adam_step(&cfg);
        assert!((s.value(id).data[0] + 0.01).abs() < 1e-9);
        assert!((s.value(id).data[1] - 0.01).abs() < 1e-9);
        assert!(s.grad(id).data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn minimizes_quadratic() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::scalar(1.0));
        let cfg = AdamConfig { lr: 0.05, ..Default::default() };
        for _ in 0..100 {
            let w = s.value(id).data[0];
            s.accumulate_grad(id, &Tensor::scalar(2.0 * w));
            s.adam_step(&cfg);
        }
        assert!(s.value(id).data[0].abs() < 0.1);
    }

    #[test]
    fn glorot_bounds_and_checkpoint_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = ParamStore::new();
        s.add_glorot("a", 10, 6, &mut rng);
        s.add("b", Tensor::vector(vec![0.5; 6]));
        let bound = (6.0f64 / 16.0).sqrt();
        assert!(s.value(ParamId(0)).data.iter().all(|x| x.abs() <= bound));
        let ck = s.to_checkpoint("abc");
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        let mut t = ParamStore::new();
        t.add("a", Tensor::zeros(&[10, 6]));
        t.add("b", Tensor::zeros(&[6]));
        t.load_checkpoint(&back).unwrap();
        assert_eq!(t.value(ParamId(0)), s.value(ParamId(0)));
        let mut wrong = ParamStore::new();
        wrong.add("a", Tensor::zeros(&[6, 10]));
        wrong.add("b", Tensor::zeros(&[6]));
        assert!(wrong.load_checkpoint(&back).is_err());
    }
}
