use crate::graph::{NodeAttrs, NodeRecord};

/// Divisor applied to post creation timestamps.
pub const TS_SCALE: f64 = 1e9;

/// Fixed-width node features.
///
/// Users: `[bag-of-words(description); ln(1+post_count); ln(1+account_age_days); verified]`.
/// Posts: `[bag-of-words(text); is_misinfo; created_ts / TS_SCALE; 0]`.
/// The bag of words is hashed into `hash_buckets` slots and L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureEncoder {
    pub hash_buckets: usize,
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl FeatureEncoder {
    pub fn new(hash_buckets: usize) -> Self {
        FeatureEncoder { hash_buckets }
    }

    pub fn width(&self) -> usize {
        self.hash_buckets + 3
    }

    fn bag_of_words(&self, text: &str, out: &mut [f64]) {
        if self.hash_buckets == 0 {
            return;
        }
        for tok in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let b = (fnv1a(&tok.to_lowercase()) % self.hash_buckets as u64) as usize;
            out[b] += 1.0;
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
        }
    }

    pub fn encode(&self, node: &NodeRecord) -> Vec<f64> {
        let mut v = vec![0.0; self.width()];
        let d = self.hash_buckets;
        match &node.attrs {
            NodeAttrs::User(u) => {
                self.bag_of_words(&u.description, &mut v[..d]);
                v[d] = (u.post_count as f64).ln_1p();
                v[d + 1] = (u.account_age_days as f64).ln_1p();
                v[d + 2] = if u.verified { 1.0 } else { 0.0 };
            }
            NodeAttrs::Post(p) => {
                self.bag_of_words(&p.text, &mut v[..d]);
                v[d] = if p.is_misinfo { 1.0 } else { 0.0 };
                v[d + 1] = p.created_ts as f64 / TS_SCALE;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{PostAttrs, UserAttrs};

    #[test]
    fn fixed_width_and_deterministic() {
        let enc = FeatureEncoder::new(16);
        let u = NodeRecord::user(
            "u",
            UserAttrs { description: "Hello hello world".into(), post_count: 9, account_age_days: 0, verified: true },
        );
        let p = NodeRecord::post(
            "p",
            PostAttrs { text: String::new(), claim_id: None, is_misinfo: true, created_ts: 2_000_000_000 },
        );
        let a = enc.encode(&u);
        assert_eq!(a.len(), 19);
        assert_eq!(a, enc.encode(&u));
        let bow_norm: f64 = a[..16].iter().map(|x| x * x).sum();
        assert!((bow_norm - 1.0).abs() < 1e-12);
        assert!((a[16] - 10f64.ln()).abs() < 1e-12);
        assert_eq!(a[18], 1.0);
        let b = enc.encode(&p);
        assert_eq!(b.len(), 19);
        assert!(b[..16].iter().all(|&x| x == 0.0));
        assert_eq!(b[16], 1.0);
        assert_eq!(b[17], 2.0);
        assert_eq!(b[18], 0.0);
    }
}
