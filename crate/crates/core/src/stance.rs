//! Stance labeling of user-to-post interaction edges.
//!
//! Any classifier can be plugged in through [`StanceProvider`]. The bundled
//! [`LexiconProvider`] counts fixed support/opposition markers in the
//! response text and is fully deterministic.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::StanceError;
use crate::graph::{EdgeKind, HeteroGraph, Stance};

/// Probability mass over the three stances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceScore {
    pub support: f64,
    pub oppose: f64,
    pub neutral: f64,
}

impl StanceScore {
    pub fn new(support: f64, oppose: f64, neutral: f64) -> Result<Self, StanceError> {
        let parts = [support, oppose, neutral];
        let in_range = parts.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p));
        if !in_range || (support + oppose + neutral - 1.0).abs() > 1e-9 {
            return Err(StanceError::InvalidScore(parts));
        }
        Ok(StanceScore { support, oppose, neutral })
    }

    pub fn one_hot(stance: Stance) -> Self {
        match stance {
            Stance::Support => StanceScore { support: 1.0, oppose: 0.0, neutral: 0.0 },
            Stance::Oppose => StanceScore { support: 0.0, oppose: 1.0, neutral: 0.0 },
            Stance::Neutral => StanceScore { support: 0.0, oppose: 0.0, neutral: 1.0 },
        }
    }

    /// Most probable stance; ties resolve Support > Oppose > Neutral.
    pub fn argmax(&self) -> Stance {
        if self.support >= self.oppose && self.support >= self.neutral {
            Stance::Support
        } else if self.oppose >= self.neutral {
            Stance::Oppose
        } else {
            Stance::Neutral
        }
    }
}

/// A stance classifier over a (source, response) text pair.
///
/// Implementations must be deterministic and total.
pub trait StanceProvider: Sync {
    fn classify(&self, source_text: &str, response_text: &str) -> StanceScore;
}

impl<F> StanceProvider for F
where
    F: Fn(&str, &str) -> StanceScore + Sync,
{
    fn classify(&self, source_text: &str, response_text: &str) -> StanceScore {
        self(source_text, response_text)
    }
}

/// Turn a bare topic into a sentence a pairwise stance model can consume.
pub fn rephrase_topic(topic: &str, context: &str) -> Result<String, StanceError> {
    let topic = normalize_ws(topic);
    if topic.is_empty() {
        return Err(StanceError::EmptyTopic);
    }
    let context = normalize_ws(context);
    Ok(if context.is_empty() {
        format!("The topic of this sentence is about {topic}.")
    } else {
        format!("The topic of this sentence is about {topic} {context}.")
    })
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub const OPPOSE_MARKERS: [&str; 8] = ["false", "fake", "debunked", "hoax", "misleading", "not true", "lie", "wrong"];
pub const SUPPORT_MARKERS: [&str; 7] = ["agree", "true", "exactly", "correct", "support", "well said", "right"];

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Count (support, oppose) markers; multiword markers consume their tokens first.
pub fn marker_counts(response_text: &str) -> (usize, usize) {
    let tokens = tokenize(response_text);
    let phrases: Vec<(Vec<&str>, bool)> = SUPPORT_MARKERS
        .iter()
        .map(|m| (*m, true))
        .chain(OPPOSE_MARKERS.iter().map(|m| (*m, false)))
        .filter(|(m, _)| m.contains(' '))
        .map(|(m, s)| (m.split(' ').collect(), s))
        .collect();
    let (mut support, mut oppose) = (0, 0);
    let mut i = 0;
    'outer: while i < tokens.len() {
        for (words, is_support) in &phrases {
            let end = i + words.len();
            if end <= tokens.len() && tokens[i..end].iter().zip(words).all(|(t, w)| t == w) {
                if *is_support {
                    support += 1;
                } else {
                    oppose += 1;
                }
                i = end;
                continue 'outer;
            }
        }
        let t = tokens[i].as_str();
        if SUPPORT_MARKERS.contains(&t) {
            support += 1;
        } else if OPPOSE_MARKERS.contains(&t) {
            oppose += 1;
        }
        i += 1;
    }
    (support, oppose)
}

pub fn lexicon_classify(_source_text: &str, response_text: &str) -> StanceScore {
    let (s, o) = marker_counts(response_text);
    StanceScore::one_hot(match s.cmp(&o) {
        std::cmp::Ordering::Greater => Stance::Support,
        std::cmp::Ordering::Less => Stance::Oppose,
        std::cmp::Ordering::Equal => Stance::Neutral,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconProvider;

impl StanceProvider for LexiconProvider {
    fn classify(&self, source_text: &str, response_text: &str) -> StanceScore {
        lexicon_classify(source_text, response_text)
    }
}

/// Provider backed by precomputed answers, e.g. from an external process.
/// Unknown pairs score Neutral.
#[derive(Debug, Clone, Default)]
pub struct TableProvider {
    table: HashMap<(String, String), StanceScore>,
}

impl TableProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source: String, response: String, score: StanceScore) {
        self.table.insert((source, response), score);
    }
}

impl StanceProvider for TableProvider {
    fn classify(&self, source_text: &str, response_text: &str) -> StanceScore {
        self.table
            .get(&(source_text.to_string(), response_text.to_string()))
            .copied()
            .unwrap_or(StanceScore::one_hot(Stance::Neutral))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BareReshareStance {
    Neutral,
    #[default]
    Support,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct LabelOptions {
    #[serde(default)]
    pub bare_reshare_stance: BareReshareStance,
}

/// A classification request for one unlabeled interaction edge.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceQuery {
    pub edge_index: usize,
    pub source: String,
    pub response: String,
}

enum Pending {
    Fixed(usize, Stance),
    Ask(StanceQuery),
}

fn pending(g: &HeteroGraph, opts: &LabelOptions) -> Vec<Pending> {
    let mut out = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        if !e.kind.is_interaction() || e.stance.is_some() {
            continue;
        }
        let source = g.node(&e.src).and_then(|n| n.as_user()).map(|u| u.description.clone()).unwrap_or_default();
        let response = g.node(&e.dst).and_then(|n| n.as_post()).map(|p| p.text.clone()).unwrap_or_default();
        if e.kind == EdgeKind::Retweets && response.trim().is_empty() {
            out.push(Pending::Fixed(
                i,
                match opts.bare_reshare_stance {
                    BareReshareStance::Support => Stance::Support,
                    BareReshareStance::Neutral => Stance::Neutral,
                },
            ));
        } else {
            out.push(Pending::Ask(StanceQuery { edge_index: i, source, response }));
        }
    }
    out
}

/// Text pairs that a provider would be asked about, in edge order.
pub fn stance_queries(g: &HeteroGraph, opts: &LabelOptions) -> Vec<StanceQuery> {
    pending(g, opts)
        .into_iter()
        .filter_map(|p| match p {
            Pending::Ask(q) => Some(q),
            Pending::Fixed(..) => None,
        })
        .collect()
}

/// Copy of `g` with every unlabeled interaction edge assigned the provider's argmax stance.
/// Existing labels are never overwritten.
pub fn label_graph_stances(g: &HeteroGraph, provider: &dyn StanceProvider, opts: &LabelOptions) -> HeteroGraph {
    let assigned: HashMap<usize, Stance> = pending(g, opts)
        .into_iter()
        .map(|p| match p {
            Pending::Ask(q) => (q.edge_index, provider.classify(&q.source, &q.response).argmax()),
            Pending::Fixed(i, s) => (i, s),
        })
        .collect();
    g.map_stances(|i, e| e.stance.or_else(|| assigned.get(&i).copied()))
}
