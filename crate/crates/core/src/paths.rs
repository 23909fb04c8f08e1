//! Stance-conditioned information-passing paths.
//!
//! Four derived user-to-post link sets are built from a snapshot:
//!
//! * **FSP / FOP** (follower-based): `u2` follows `u1`, and `u1` supports /
//!   opposes post `p`. Emits `(u2, p)`.
//! * **ESP / EOP** (engagement-based): `u1` and `u2` both engaged some other
//!   post `p'` strictly before `u1` supports / opposes `p`. Emits `(u2, p)`.
//!
//! `Main` is the snapshot's own edge multiset.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GraphError, PathError};
use crate::graph::{Edge, EdgeKind, HeteroGraph, NodeId, Stance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Main,
    Fsp,
    Fop,
    Esp,
    Eop,
}

impl PathKind {
    /// Fixed order used for attention logits and trajectories.
    pub const ALL: [PathKind; 5] = [PathKind::Main, PathKind::Fsp, PathKind::Fop, PathKind::Esp, PathKind::Eop];
    pub const DERIVED: [PathKind; 4] = [PathKind::Fsp, PathKind::Fop, PathKind::Esp, PathKind::Eop];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::Main => "main",
            PathKind::Fsp => "fsp",
            PathKind::Fop => "fop",
            PathKind::Esp => "esp",
            PathKind::Eop => "eop",
        }
    }

    fn trigger(self) -> Option<Stance> {
        match self {
            PathKind::Fsp | PathKind::Esp => Some(Stance::Support),
            PathKind::Fop | PathKind::Eop => Some(Stance::Oppose),
            PathKind::Main => None,
        }
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PathKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown path kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DerivedEdge {
    pub user: NodeId,
    pub post: NodeId,
    #[serde(rename = "path")]
    pub kind: PathKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathConfig {
    /// Build derived paths toward every post, not only misinformation.
    pub paths_all_posts: bool,
    /// Only count co-engagement within this many seconds before the focal interaction.
    pub co_engage_window_secs: Option<i64>,
}

/// Per-(user, post) count of distinct intermediary users for each derived path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exposure {
    pub fsp: u32,
    pub fop: u32,
    pub esp: u32,
    pub eop: u32,
}

impl Exposure {
    pub fn get(&self, kind: PathKind) -> u32 {
        match kind {
            PathKind::Fsp => self.fsp,
            PathKind::Fop => self.fop,
            PathKind::Esp => self.esp,
            PathKind::Eop => self.eop,
            PathKind::Main => 0,
        }
    }

    fn slot(&mut self, kind: PathKind) -> &mut u32 {
        match kind {
            PathKind::Fsp => &mut self.fsp,
            PathKind::Fop => &mut self.fop,
            PathKind::Esp => &mut self.esp,
            PathKind::Eop => &mut self.eop,
            PathKind::Main => unreachable!("main has no exposure slot"),
        }
    }
}

/// The five neighbor structures: the original edges plus four derived link sets.
#[derive(Debug, Clone, Default)]
pub struct PathGraphs {
    pub main: Vec<Edge>,
    pub derived: BTreeMap<PathKind, BTreeSet<DerivedEdge>>,
}

impl PathGraphs {
    pub fn get(&self, kind: PathKind) -> Option<&BTreeSet<DerivedEdge>> {
        self.derived.get(&kind)
    }

    pub fn derived_is_empty(&self) -> bool {
        self.derived.values().all(BTreeSet::is_empty)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), GraphError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for set in self.derived.values() {
            for e in set {
                serde_json::to_writer(&mut w, e)?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn is_target(g: &HeteroGraph, post: &NodeId, cfg: &PathConfig) -> bool {
    g.node(post).and_then(|n| n.as_post()).is_some_and(|p| cfg.paths_all_posts || p.is_misinfo)
}

fn check_labels(g: &HeteroGraph, cfg: &PathConfig) -> Result<(), PathError> {
    match g.interaction_edges().find(|e| e.stance.is_none() && is_target(g, &e.dst, cfg)) {
        Some(e) => Err(PathError::UnlabeledStance { user: e.src.to_string(), post: e.dst.to_string() }),
        None => Ok(()),
    }
}

type Intermediaries = HashMap<(usize, usize), HashSet<usize>>;

struct Engagements {
    // per user: (post, ts)
    by_user: HashMap<usize, Vec<(usize, i64)>>,
    // per post: (user, ts)
    by_post: HashMap<usize, Vec<(usize, i64)>>,
}

impl Engagements {
    fn new(g: &HeteroGraph) -> Self {
        let mut by_user: HashMap<usize, Vec<(usize, i64)>> = HashMap::new();
        let mut by_post: HashMap<usize, Vec<(usize, i64)>> = HashMap::new();
        for e in g.interaction_edges() {
            let (u, p, ts) = (idx(g, &e.src), idx(g, &e.dst), e.ts.expect("interaction edges carry ts"));
            by_user.entry(u).or_default().push((p, ts));
            by_post.entry(p).or_default().push((u, ts));
        }
        Engagements { by_user, by_post }
    }
}

fn idx(g: &HeteroGraph, id: &NodeId) -> usize {
    g.node_index(id).expect("edge endpoints exist")
}

fn collect(g: &HeteroGraph, cfg: &PathConfig, kind: PathKind, out: &mut Intermediaries, eng: Option<&Engagements>) {
    let trigger = kind.trigger().expect("derived kind");
    for e in g.interaction_edges() {
        if e.stance != Some(trigger) || !is_target(g, &e.dst, cfg) {
            continue;
        }
        let (u1, p) = (idx(g, &e.src), idx(g, &e.dst));
        match kind {
            PathKind::Fsp | PathKind::Fop => {
                for &fe in g.in_edges(&e.src, EdgeKind::Follows) {
                    let u2 = idx(g, &g.edges()[fe].src);
                    out.entry((u2, p)).or_default().insert(u1);
                }
            }
            _ => {
                let eng = eng.expect("engagement index");
                let t = e.ts.expect("interaction edges carry ts");
                let lo = cfg.co_engage_window_secs.map(|w| t - w);
                let in_range = |ts: i64| ts < t && lo.is_none_or(|lo| ts >= lo);
                let mut shared: BTreeSet<usize> = BTreeSet::new();
                for &(p_prev, ts) in eng.by_user.get(&u1).map(Vec::as_slice).unwrap_or(&[]) {
                    if p_prev != p && in_range(ts) {
                        shared.insert(p_prev);
                    }
                }
                for p_prev in shared {
                    for &(u2, ts2) in &eng.by_post[&p_prev] {
                        if u2 != u1 && in_range(ts2) {
                            out.entry((u2, p)).or_default().insert(u1);
                        }
                    }
                }
            }
        }
    }
}

fn derive(g: &HeteroGraph, cfg: &PathConfig, kind: PathKind) -> Result<Intermediaries, PathError> {
    check_labels(g, cfg)?;
    let mut out = Intermediaries::new();
    let eng = matches!(kind, PathKind::Esp | PathKind::Eop).then(|| Engagements::new(g));
    collect(g, cfg, kind, &mut out, eng.as_ref());
    Ok(out)
}

fn to_set(g: &HeteroGraph, kind: PathKind, m: Intermediaries) -> BTreeSet<DerivedEdge> {
    m.into_keys()
        .map(|(u, p)| DerivedEdge { user: g.node_at(u).id.clone(), post: g.node_at(p).id.clone(), kind })
        .collect()
}

/// Derived link set for one path kind.
pub fn build_path(g: &HeteroGraph, kind: PathKind, cfg: &PathConfig) -> Result<BTreeSet<DerivedEdge>, PathError> {
    if kind == PathKind::Main {
        return Ok(BTreeSet::new());
    }
    Ok(to_set(g, kind, derive(g, cfg, kind)?))
}

pub fn build_fsp(g: &HeteroGraph, cfg: &PathConfig) -> Result<BTreeSet<DerivedEdge>, PathError> {
    build_path(g, PathKind::Fsp, cfg)
}

pub fn build_fop(g: &HeteroGraph, cfg: &PathConfig) -> Result<BTreeSet<DerivedEdge>, PathError> {
    build_path(g, PathKind::Fop, cfg)
}

pub fn build_esp(g: &HeteroGraph, cfg: &PathConfig) -> Result<BTreeSet<DerivedEdge>, PathError> {
    build_path(g, PathKind::Esp, cfg)
}

pub fn build_eop(g: &HeteroGraph, cfg: &PathConfig) -> Result<BTreeSet<DerivedEdge>, PathError> {
    build_path(g, PathKind::Eop, cfg)
}

pub fn materialize(g: &HeteroGraph, cfg: &PathConfig) -> Result<PathGraphs, PathError> {
    let mut derived = BTreeMap::new();
    for kind in PathKind::DERIVED {
        derived.insert(kind, build_path(g, kind, cfg)?);
    }
    Ok(PathGraphs { main: g.edges().to_vec(), derived })
}

/// Number of distinct intermediary users behind every derived (user, post) link.
pub fn path_multiplicities(
    g: &HeteroGraph,
    cfg: &PathConfig,
) -> Result<BTreeMap<(NodeId, NodeId), Exposure>, PathError> {
    check_labels(g, cfg)?;
    let eng = Engagements::new(g);
    let mut out: BTreeMap<(NodeId, NodeId), Exposure> = BTreeMap::new();
    for kind in PathKind::DERIVED {
        let mut m = Intermediaries::new();
        collect(g, cfg, kind, &mut m, Some(&eng));
        for ((u, p), via) in m {
            let key = (g.node_at(u).id.clone(), g.node_at(p).id.clone());
            *out.entry(key).or_default().slot(kind) = via.len() as u32;
        }
    }
    Ok(out)
}
