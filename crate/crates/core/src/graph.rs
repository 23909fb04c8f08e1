//! Typed heterogeneous user/post graph with timestamped, stance-annotated edges.
//!
//! Nodes are either users or posts. Edges carry an [`EdgeKind`] whose endpoint
//! typing is enforced at insertion. Interaction edges (user to post) must carry
//! a timestamp and are the only edges that may carry a [`Stance`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::GraphError;

/// Opaque node identifier, unique across users and posts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    User,
    Post,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserAttrs {
    pub description: String,
    pub post_count: u64,
    pub account_age_days: u64,
    #[serde(default)]
    pub verified: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PostAttrs {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_id: Option<String>,
    pub is_misinfo: bool,
    pub created_ts: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeAttrs {
    User(UserAttrs),
    Post(PostAttrs),
}

impl NodeAttrs {
    pub fn kind(&self) -> NodeKind {
        match self {
            NodeAttrs::User(_) => NodeKind::User,
            NodeAttrs::Post(_) => NodeKind::Post,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    pub attrs: NodeAttrs,
}

impl NodeRecord {
    pub fn user(id: impl Into<String>, attrs: UserAttrs) -> Self {
        NodeRecord { id: NodeId::new(id), kind: NodeKind::User, attrs: NodeAttrs::User(attrs) }
    }

    pub fn post(id: impl Into<String>, attrs: PostAttrs) -> Self {
        NodeRecord { id: NodeId::new(id), kind: NodeKind::Post, attrs: NodeAttrs::Post(attrs) }
    }

    pub fn as_user(&self) -> Option<&UserAttrs> {
        match &self.attrs {
            NodeAttrs::User(u) => Some(u),
            NodeAttrs::Post(_) => None,
        }
    }

    pub fn as_post(&self) -> Option<&PostAttrs> {
        match &self.attrs {
            NodeAttrs::Post(p) => Some(p),
            NodeAttrs::User(_) => None,
        }
    }

    pub fn is_misinfo_post(&self) -> bool {
        self.as_post().is_some_and(|p| p.is_misinfo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Follows,
    Mentions,
    SameClaim,
    SharedKeyword,
    Posts,
    Retweets,
    Replies,
    Quotes,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 8] = [
        EdgeKind::Follows,
        EdgeKind::Mentions,
        EdgeKind::SameClaim,
        EdgeKind::SharedKeyword,
        EdgeKind::Posts,
        EdgeKind::Retweets,
        EdgeKind::Replies,
        EdgeKind::Quotes,
    ];

    /// Required (source kind, destination kind).
    pub fn endpoint_kinds(self) -> (NodeKind, NodeKind) {
        match self {
            EdgeKind::Follows | EdgeKind::Mentions => (NodeKind::User, NodeKind::User),
            EdgeKind::SameClaim | EdgeKind::SharedKeyword => (NodeKind::Post, NodeKind::Post),
            EdgeKind::Posts | EdgeKind::Retweets | EdgeKind::Replies | EdgeKind::Quotes => {
                (NodeKind::User, NodeKind::Post)
            }
        }
    }

    /// User-to-post edges: the only kinds that carry stance and require a timestamp.
    pub fn is_interaction(self) -> bool {
        matches!(self, EdgeKind::Posts | EdgeKind::Retweets | EdgeKind::Replies | EdgeKind::Quotes)
    }

    /// Post-to-post kinds are stored once per unordered pair.
    pub fn is_symmetric(self) -> bool {
        matches!(self, EdgeKind::SameClaim | EdgeKind::SharedKeyword)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Follows => "follows",
            EdgeKind::Mentions => "mentions",
            EdgeKind::SameClaim => "same_claim",
            EdgeKind::SharedKeyword => "shared_keyword",
            EdgeKind::Posts => "posts",
            EdgeKind::Retweets => "retweets",
            EdgeKind::Replies => "replies",
            EdgeKind::Quotes => "quotes",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Support,
    Oppose,
    Neutral,
}

impl Stance {
    pub const ALL: [Stance; 3] = [Stance::Support, Stance::Oppose, Stance::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Support => "support",
            Stance::Oppose => "oppose",
            Stance::Neutral => "neutral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    pub stance: Option<Stance>,
    pub ts: Option<i64>,
}

impl Edge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, kind: EdgeKind) -> Self {
        Edge { src: NodeId::new(src), dst: NodeId::new(dst), kind, stance: None, ts: None }
    }

    pub fn with_ts(mut self, ts: i64) -> Self {
        self.ts = Some(ts);
        self
    }

    pub fn with_stance(mut self, stance: Stance) -> Self {
        self.stance = Some(stance);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

/// Heterogeneous graph `G = (V, E)` over users and posts.
///
/// Nodes keep insertion order; edges are a multiset in insertion order with
/// adjacency indices keyed by `(node, kind)` in both directions.
#[derive(Debug, Clone, Default)]
pub struct HeteroGraph {
    nodes: Vec<NodeRecord>,
    index: HashMap<NodeId, usize>,
    edges: Vec<Edge>,
    out_index: HashMap<(usize, EdgeKind), Vec<usize>>,
    in_index: HashMap<(usize, EdgeKind), Vec<usize>>,
    edge_keys: HashSet<(usize, usize, EdgeKind, Option<i64>)>,
}

impl HeteroGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, record: NodeRecord) -> Result<(), GraphError> {
        if record.id.as_str().is_empty() {
            return Err(GraphError::SchemaMismatch { id: String::new(), reason: "node id must be non-empty".into() });
        }
        if self.index.contains_key(&record.id) {
            return Err(GraphError::DuplicateId(record.id.to_string()));
        }
        if record.attrs.kind() != record.kind {
            return Err(GraphError::SchemaMismatch {
                id: record.id.to_string(),
                reason: format!("{:?} node carries {:?} attributes", record.kind, record.attrs.kind()),
            });
        }
        self.index.insert(record.id.clone(), self.nodes.len());
        self.nodes.push(record);
        Ok(())
    }

    pub fn add_edge(&mut self, mut edge: Edge) -> Result<(), GraphError> {
        let mut s = self.idx(&edge.src).ok_or_else(|| GraphError::UnknownEndpoint(edge.src.to_string()))?;
        let mut d = self.idx(&edge.dst).ok_or_else(|| GraphError::UnknownEndpoint(edge.dst.to_string()))?;
        let (want_src, want_dst) = edge.kind.endpoint_kinds();
        let (got_src, got_dst) = (self.nodes[s].kind, self.nodes[d].kind);
        if (got_src, got_dst) != (want_src, want_dst) {
            return Err(GraphError::KindTypingViolation { kind: edge.kind, src: got_src, dst: got_dst });
        }
        if edge.kind.is_interaction() {
            if edge.ts.is_none() {
                return Err(GraphError::MissingTimestamp { src: edge.src.to_string(), dst: edge.dst.to_string() });
            }
        } else if edge.stance.is_some() {
            return Err(GraphError::IllegalStance(edge.kind));
        }
        if edge.kind.is_symmetric() && edge.dst < edge.src {
            std::mem::swap(&mut edge.src, &mut edge.dst);
            std::mem::swap(&mut s, &mut d);
        }
        if !self.edge_keys.insert((s, d, edge.kind, edge.ts)) {
            return Err(GraphError::DuplicateEdge {
                src: edge.src.to_string(),
                dst: edge.dst.to_string(),
                kind: edge.kind,
                ts: edge.ts,
            });
        }
        let e = self.edges.len();
        self.out_index.entry((s, edge.kind)).or_default().push(e);
        self.in_index.entry((d, edge.kind)).or_default().push(e);
        self.edges.push(edge);
        Ok(())
    }

    fn idx(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.idx(id)
    }

    pub fn node(&self, id: &NodeId) -> Option<&NodeRecord> {
        self.idx(id).map(|i| &self.nodes[i])
    }

    pub fn node_at(&self, i: usize) -> &NodeRecord {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn users(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::User)
    }

    pub fn posts(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Post)
    }

    /// Edge indices leaving `node` with the given kind.
    pub fn out_edges(&self, node: &NodeId, kind: EdgeKind) -> &[usize] {
        self.idx(node).and_then(|i| self.out_index.get(&(i, kind))).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edge indices entering `node` with the given kind.
    pub fn in_edges(&self, node: &NodeId, kind: EdgeKind) -> &[usize] {
        self.idx(node).and_then(|i| self.in_index.get(&(i, kind))).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Interaction edges in insertion order.
    pub fn interaction_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind.is_interaction())
    }

    /// Sorted, deduplicated neighbors of `node` over the given kinds.
    pub fn neighbors(
        &self,
        node: &NodeId,
        kinds: &[EdgeKind],
        direction: Direction,
    ) -> Result<Vec<NodeId>, GraphError> {
        if !self.index.contains_key(node) {
            return Err(GraphError::UnknownNode(node.to_string()));
        }
        let mut out: Vec<NodeId> = Vec::new();
        for &kind in kinds {
            // symmetric kinds are traversed both ways regardless of storage direction
            let (use_out, use_in) = match (direction, kind.is_symmetric()) {
                (_, true) | (Direction::Both, _) => (true, true),
                (Direction::Out, false) => (true, false),
                (Direction::In, false) => (false, true),
            };
            if use_out {
                out.extend(self.out_edges(node, kind).iter().map(|&e| self.edges[e].dst.clone()));
            }
            if use_in {
                out.extend(self.in_edges(node, kind).iter().map(|&e| self.edges[e].src.clone()));
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Copy containing all nodes, all untimestamped edges, and timestamped edges with `ts <= t`.
    pub fn snapshot_before(&self, t: i64) -> HeteroGraph {
        self.filter_edges(|e| e.ts.is_none_or(|ts| ts <= t))
    }

    pub(crate) fn filter_edges(&self, keep: impl Fn(&Edge) -> bool) -> HeteroGraph {
        let mut g = HeteroGraph { nodes: self.nodes.clone(), index: self.index.clone(), ..Default::default() };
        for e in self.edges.iter().filter(|e| keep(e)) {
            g.push_trusted(e.clone());
        }
        g
    }

    /// Copy with per-edge stance rewritten; never changes kinds, endpoints or timestamps.
    pub(crate) fn map_stances(&self, mut f: impl FnMut(usize, &Edge) -> Option<Stance>) -> HeteroGraph {
        let mut g = self.clone();
        for (i, e) in g.edges.iter_mut().enumerate() {
            e.stance = f(i, &self.edges[i]);
        }
        g
    }

    // edge already validated by the source graph
    fn push_trusted(&mut self, edge: Edge) {
        let s = self.index[&edge.src];
        let d = self.index[&edge.dst];
        let e = self.edges.len();
        self.edge_keys.insert((s, d, edge.kind, edge.ts));
        self.out_index.entry((s, edge.kind)).or_default().push(e);
        self.in_index.entry((d, edge.kind)).or_default().push(e);
        self.edges.push(edge);
    }

    /// Same node set and same edge multiset, ignoring insertion order.
    pub fn graph_eq(&self, other: &HeteroGraph) -> bool {
        let sorted_nodes = |g: &HeteroGraph| {
            let mut v: Vec<_> = g.nodes.iter().map(|n| (n.id.clone(), format!("{:?}", n.attrs))).collect();
            v.sort();
            v
        };
        let sorted_edges = |g: &HeteroGraph| {
            let mut v = g.edges.clone();
            v.sort();
            v
        };
        sorted_nodes(self) == sorted_nodes(other) && sorted_edges(self) == sorted_edges(other)
    }

    /// Earliest and latest interaction timestamps, if any.
    pub fn interaction_ts_range(&self) -> Option<(i64, i64)> {
        let mut it = self.interaction_edges().filter_map(|e| e.ts);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }

    pub fn load_jsonl(nodes_path: &Path, edges_path: &Path) -> Result<HeteroGraph, GraphError> {
        Self::load_jsonl_with(nodes_path, edges_path, false)
    }

    /// Load with optional leniency toward unknown JSON keys.
    pub fn load_jsonl_with(nodes_path: &Path, edges_path: &Path, lenient: bool) -> Result<HeteroGraph, GraphError> {
        let mut g = HeteroGraph::new();
        for_each_line(nodes_path, |line_no, line| {
            let rec = parse_node_line(line, lenient).map_err(|e| e.at_line(nodes_path, line_no))?;
            g.add_node(rec).map_err(|e| e.at_line(nodes_path, line_no))
        })?;
        for_each_line(edges_path, |line_no, line| {
            let edge = parse_edge_line(line, lenient).map_err(|e| e.at_line(edges_path, line_no))?;
            g.add_edge(edge).map_err(|e| e.at_line(edges_path, line_no))
        })?;
        Ok(g)
    }

    pub fn save_jsonl(&self, nodes_path: &Path, edges_path: &Path) -> Result<(), GraphError> {
        let mut w = BufWriter::new(File::create(nodes_path)?);
        for n in &self.nodes {
            serde_json::to_writer(&mut w, &node_to_json(n))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(edges_path)?);
        for e in &self.edges {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn for_each_line(path: &Path, mut f: impl FnMut(usize, &str) -> Result<(), GraphError>) -> Result<(), GraphError> {
    let reader = BufReader::new(File::open(path)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

const USER_KEYS: [&str; 4] = ["description", "post_count", "account_age_days", "verified"];
const POST_KEYS: [&str; 4] = ["text", "claim_id", "is_misinfo", "created_ts"];

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<(), GraphError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(GraphError::Parse(format!("unknown {what} key `{k}`"))),
        None => Ok(()),
    }
}

fn parse_node_line(line: &str, lenient: bool) -> Result<NodeRecord, GraphError> {
    let value: Value = serde_json::from_str(line).map_err(|e| GraphError::Parse(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| GraphError::Parse("node line is not a JSON object".into()))?;
    if !lenient {
        check_keys(obj, &["id", "kind", "attrs"], "node")?;
    }
    let id = obj
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| GraphError::Parse("missing string `id`".into()))?
        .to_string();
    let kind: NodeKind = serde_json::from_value(obj.get("kind").cloned().unwrap_or(Value::Null))
        .map_err(|e| GraphError::Parse(format!("bad `kind`: {e}")))?;
    let attrs = obj.get("attrs").cloned().unwrap_or_else(|| Value::Object(Map::new()));
    let attr_obj = attrs.as_object().ok_or_else(|| GraphError::Parse("`attrs` must be an object".into()))?;
    let mismatch = |reason: String| GraphError::SchemaMismatch { id: id.clone(), reason };
    let attrs = match kind {
        NodeKind::User => {
            if !lenient {
                check_keys(attr_obj, &USER_KEYS, "user attribute").map_err(|e| mismatch(e.to_string()))?;
            }
            NodeAttrs::User(serde_json::from_value(attrs.clone()).map_err(|e| mismatch(e.to_string()))?)
        }
        NodeKind::Post => {
            if !lenient {
                check_keys(attr_obj, &POST_KEYS, "post attribute").map_err(|e| mismatch(e.to_string()))?;
            }
            let p: PostAttrs = serde_json::from_value(attrs.clone()).map_err(|e| mismatch(e.to_string()))?;
            if p.created_ts < 0 {
                return Err(mismatch("created_ts must be non-negative".into()));
            }
            NodeAttrs::Post(p)
        }
    };
    Ok(NodeRecord { id: NodeId(id), kind, attrs })
}

fn parse_edge_line(line: &str, lenient: bool) -> Result<Edge, GraphError> {
    let value: Value = serde_json::from_str(line).map_err(|e| GraphError::Parse(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| GraphError::Parse("edge line is not a JSON object".into()))?;
    let mut fields = Map::new();
    for key in ["src", "dst", "kind", "stance", "ts"] {
        fields.insert(key.to_string(), obj.get(key).cloned().unwrap_or(Value::Null));
    }
    if !lenient {
        check_keys(obj, &["src", "dst", "kind", "stance", "ts"], "edge")?;
    }
    serde_json::from_value(Value::Object(fields)).map_err(|e| GraphError::Parse(e.to_string()))
}

fn node_to_json(n: &NodeRecord) -> Value {
    let attrs = match &n.attrs {
        NodeAttrs::User(u) => serde_json::to_value(u),
        NodeAttrs::Post(p) => serde_json::to_value(p),
    }
    .expect("attrs serialize");
    let mut m = BTreeMap::new();
    m.insert("id", Value::String(n.id.to_string()));
    m.insert("kind", serde_json::to_value(n.kind).expect("kind serializes"));
    m.insert("attrs", attrs);
    serde_json::to_value(m).expect("node serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn user(id: &str) -> NodeRecord {
        NodeRecord::user(
            id,
            UserAttrs { description: String::new(), post_count: 0, account_age_days: 0, verified: false },
        )
    }

    pub(crate) fn post(id: &str, misinfo: bool) -> NodeRecord {
        NodeRecord::post(id, PostAttrs { text: "some text".into(), claim_id: None, is_misinfo: misinfo, created_ts: 0 })
    }

    #[test]
    fn add_node_rules() {
        let mut g = HeteroGraph::new();
        g.add_node(user("u1")).unwrap();
        assert!(matches!(g.add_node(user("u1")), Err(GraphError::DuplicateId(_))));
        let bad = NodeRecord { id: NodeId::new("p1"), kind: NodeKind::Post, attrs: user("x").attrs };
        assert!(matches!(g.add_node(bad), Err(GraphError::SchemaMismatch { .. })));
    }

    #[test]
    fn add_edge_typing() {
        let mut g = HeteroGraph::new();
        for id in ["u1", "u2"] {
            g.add_node(user(id)).unwrap();
        }
        g.add_node(post("p1", true)).unwrap();
        g.add_edge(Edge::new("u1", "u2", EdgeKind::Follows)).unwrap();
        assert!(matches!(
            g.add_edge(Edge::new("u1", "p1", EdgeKind::Follows)),
            Err(GraphError::KindTypingViolation { .. })
        ));
        assert!(matches!(
            g.add_edge(Edge::new("u1", "p1", EdgeKind::Retweets)),
            Err(GraphError::MissingTimestamp { .. })
        ));
        assert!(matches!(
            g.add_edge(Edge::new("u1", "u2", EdgeKind::Mentions).with_stance(Stance::Support)),
            Err(GraphError::IllegalStance(_))
        ));
        assert!(matches!(g.add_edge(Edge::new("u1", "zz", EdgeKind::Follows)), Err(GraphError::UnknownEndpoint(_))));
        g.add_edge(Edge::new("u1", "p1", EdgeKind::Retweets).with_ts(3).with_stance(Stance::Support)).unwrap();
        assert!(matches!(
            g.add_edge(Edge::new("u1", "p1", EdgeKind::Retweets).with_ts(3)),
            Err(GraphError::DuplicateEdge { .. })
        ));
        // same tuple at a different time is a distinct interaction
        g.add_edge(Edge::new("u1", "p1", EdgeKind::Retweets).with_ts(4)).unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn symmetric_kinds_are_canonicalized() {
        let mut g = HeteroGraph::new();
        g.add_node(post("pb", false)).unwrap();
        g.add_node(post("pa", false)).unwrap();
        g.add_edge(Edge::new("pb", "pa", EdgeKind::SameClaim)).unwrap();
        assert_eq!(g.edges()[0].src.as_str(), "pa");
        assert!(g.add_edge(Edge::new("pa", "pb", EdgeKind::SameClaim)).is_err());
        let n = g.neighbors(&"pa".into(), &[EdgeKind::SameClaim], Direction::In).unwrap();
        assert_eq!(n, vec![NodeId::new("pb")]);
    }

    #[test]
    fn neighbors_basic() {
        let mut g = HeteroGraph::new();
        for id in ["u1", "u3", "u2", "u4"] {
            g.add_node(user(id)).unwrap();
        }
        g.add_edge(Edge::new("u1", "u3", EdgeKind::Follows)).unwrap();
        g.add_edge(Edge::new("u1", "u2", EdgeKind::Follows)).unwrap();
        let n = g.neighbors(&"u1".into(), &[EdgeKind::Follows], Direction::Out).unwrap();
        assert_eq!(n, vec![NodeId::new("u2"), NodeId::new("u3")]);
        assert!(g.neighbors(&"u4".into(), &EdgeKind::ALL, Direction::Both).unwrap().is_empty());
        assert!(matches!(
            g.neighbors(&"nope".into(), &EdgeKind::ALL, Direction::Both),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn snapshot_extremes() {
        let mut g = HeteroGraph::new();
        g.add_node(user("u1")).unwrap();
        g.add_node(user("u2")).unwrap();
        g.add_node(post("p1", true)).unwrap();
        g.add_edge(Edge::new("u1", "u2", EdgeKind::Follows)).unwrap();
        g.add_edge(Edge::new("u1", "p1", EdgeKind::Posts).with_ts(5)).unwrap();
        g.add_edge(Edge::new("u2", "p1", EdgeKind::Replies).with_ts(9)).unwrap();
        assert!(g.snapshot_before(9).graph_eq(&g));
        let early = g.snapshot_before(4);
        assert_eq!(early.edge_count(), 1);
        assert_eq!(early.node_count(), 3);
        assert_eq!(early.edges()[0].kind, EdgeKind::Follows);
    }
}
