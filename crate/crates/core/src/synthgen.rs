//! Synthetic stance-labeled social graphs with a known diffusion process.
//!
//! Users belong to communities that follow each other mostly internally.
//! Even-numbered communities are receptive to misinformation and odd-numbered
//! ones are skeptical, so the stance a user takes toward a misinformation post
//! depends on a community trait that is invisible in node features. Each
//! (user, misinformation post) pair left unlinked during the history period
//! then propagates in the future period with probability
//! `sigmoid(b0 + β_fsp·x_fsp − β_fop·x_fop + β_esp·x_esp − β_eop·x_eop)`,
//! where the exposures `x_*` are path multiplicities on the history snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{GraphError, SynthError};
use crate::graph::{Edge, EdgeKind, HeteroGraph, NodeId, NodeRecord, PostAttrs, Stance, UserAttrs};
use crate::paths::{path_multiplicities, Exposure, PathConfig};
use crate::training::stream_rng;

/// Seconds per simulated step.
pub const STEP_SECS: i64 = 86_400;
/// Timestamp of the first simulated event.
pub const EPOCH_START: i64 = 1_600_000_000;

const VOCAB: &[&str] = &[
    "news", "today", "people", "world", "city", "music", "game", "vote", "health", "food", "travel", "photo", "story",
    "video", "school", "money", "market", "weather", "family", "friends", "science", "sports", "movie", "book",
    "coffee", "team", "update", "event", "local", "night", "morning", "weekend", "love", "work", "life", "tech", "art",
    "dog", "cat", "summer", "winter", "garden", "river", "road", "home", "energy", "water", "data",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizePreset {
    Small,
    Medium,
    Large,
}

impl SizePreset {
    /// `(n_users, n_posts, n_communities)`; community size stays near 100.
    pub fn sizes(self) -> (usize, usize, usize) {
        match self {
            SizePreset::Small => (100, 10, 2),
            SizePreset::Medium => (1_000, 100, 10),
            SizePreset::Large => (10_000, 1_000, 100),
        }
    }
}

impl std::str::FromStr for SizePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(SizePreset::Small),
            "medium" => Ok(SizePreset::Medium),
            "large" => Ok(SizePreset::Large),
            other => Err(format!("unknown size preset `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// When set, overrides `n_users`, `n_posts` and `n_communities`.
    pub size_preset: Option<SizePreset>,
    pub n_users: usize,
    pub n_posts: usize,
    pub misinfo_frac: f64,
    pub n_communities: usize,
    pub p_follow_in: f64,
    pub p_follow_out: f64,
    /// Chance a user aligned with a post supports it (otherwise neutral).
    pub p_support: f64,
    /// Chance a user misaligned with a post opposes it (otherwise neutral).
    pub p_oppose: f64,
    pub beta_fsp: f64,
    pub beta_fop: f64,
    pub beta_esp: f64,
    pub beta_eop: f64,
    pub b0: f64,
    /// Mean number of regular posts each user engages with during the history period.
    pub mean_engagements: f64,
    /// Share of regular engagements aimed at the user's own community's posts.
    pub home_affinity: f64,
    /// Share of users who engage misinformation during the history period.
    pub misinfo_active_frac: f64,
    /// Chance an active user engages each misinformation post.
    pub misinfo_active_rate: f64,
    /// Cap on the expected number of misinformation posts one active user engages;
    /// with more misinformation posts than this the per-post rate shrinks to match.
    pub misinfo_reach: usize,
    pub history_steps: usize,
    pub horizon_steps: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            size_preset: None,
            n_users: 300,
            n_posts: 30,
            misinfo_frac: 0.2,
            n_communities: 4,
            p_follow_in: 0.06,
            p_follow_out: 0.002,
            p_support: 0.8,
            p_oppose: 0.8,
            beta_fsp: 0.5,
            beta_fop: 2.0,
            beta_esp: 0.5,
            beta_eop: 2.0,
            b0: -2.0,
            mean_engagements: 1.5,
            home_affinity: 0.95,
            misinfo_active_frac: 0.1,
            misinfo_active_rate: 1.0,
            misinfo_reach: 20,
            history_steps: 30,
            horizon_steps: 30,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn preset(preset: SizePreset) -> Self {
        SynthConfig { size_preset: Some(preset), ..Default::default() }.resolved()
    }

    /// Copy with the size preset applied.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if let Some(p) = c.size_preset {
            (c.n_users, c.n_posts, c.n_communities) = p.sizes();
        }
        c
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::ConfigInvalid(m));
        let c = self.resolved();
        for (name, p) in [
            ("misinfo_frac", c.misinfo_frac),
            ("p_follow_in", c.p_follow_in),
            ("p_follow_out", c.p_follow_out),
            ("p_support", c.p_support),
            ("p_oppose", c.p_oppose),
            ("home_affinity", c.home_affinity),
            ("misinfo_active_frac", c.misinfo_active_frac),
            ("misinfo_active_rate", c.misinfo_active_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, b) in [
            ("beta_fsp", c.beta_fsp),
            ("beta_fop", c.beta_fop),
            ("beta_esp", c.beta_esp),
            ("beta_eop", c.beta_eop),
            ("b0", c.b0),
        ] {
            if !b.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if c.n_communities == 0 || c.n_communities > c.n_users.max(1) {
            return bad(format!("n_communities must be between 1 and n_users, got {}", c.n_communities));
        }
        if c.n_users == 0 || c.n_posts == 0 {
            return bad("n_users and n_posts must be positive".into());
        }
        if !(c.mean_engagements >= 0.0 && c.mean_engagements.is_finite()) {
            return bad("mean_engagements must be non-negative".into());
        }
        if c.history_steps == 0 || c.horizon_steps == 0 {
            return bad("history_steps and horizon_steps must be positive".into());
        }
        Ok(())
    }

    pub fn n_misinfo(&self) -> usize {
        ((self.n_posts as f64) * self.misinfo_frac).round() as usize
    }

    /// Last timestamp of the history period.
    pub fn history_end(&self) -> i64 {
        EPOCH_START + (self.history_steps as i64 + 1) * STEP_SECS - 1
    }

    /// Per-post engagement chance of an active user after applying `misinfo_reach`.
    pub fn misinfo_engage_rate(&self) -> f64 {
        let n = self.n_misinfo();
        if n <= self.misinfo_reach {
            self.misinfo_active_rate
        } else {
            self.misinfo_active_rate * self.misinfo_reach as f64 / n as f64
        }
    }
}

/// One candidate (user, misinformation post) pair of the future period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthRecord {
    pub user: NodeId,
    pub post: NodeId,
    pub x_fsp: u32,
    pub x_fop: u32,
    pub x_esp: u32,
    pub x_eop: u32,
    pub p_star: f64,
    pub realized: bool,
}

impl GroundTruthRecord {
    pub fn exposure(&self) -> Exposure {
        Exposure { fsp: self.x_fsp, fop: self.x_fop, esp: self.x_esp, eop: self.x_eop }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Last timestamp of the history period; every future edge is later.
    pub history_end: i64,
    pub records: Vec<GroundTruthRecord>,
}

impl GroundTruth {
    pub fn write_jsonl(&self, path: &Path) -> Result<(), GraphError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut f, r)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Vec<GroundTruthRecord>, GraphError> {
        let text = std::fs::read_to_string(path)?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| GraphError::from(e).at_line(path, i + 1)))
            .collect()
    }

    pub fn realized_count(&self) -> usize {
        self.records.iter().filter(|r| r.realized).count()
    }
}

/// `sigmoid(b0 + β_fsp·x_fsp − β_fop·x_fop + β_esp·x_esp − β_eop·x_eop)`.
pub fn ground_truth_probability(x: &Exposure, cfg: &SynthConfig) -> f64 {
    let z = cfg.b0 + cfg.beta_fsp * x.fsp as f64 - cfg.beta_fop * x.fop as f64 + cfg.beta_esp * x.esp as f64
        - cfg.beta_eop * x.eop as f64;
    // unclamped, unlike the model's sigmoid, so tiny probabilities stay exact
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| *VOCAB.choose(rng).expect("non-empty vocab")).collect::<Vec<_>>().join(" ")
}

// Independent random streams, so changing one stage's parameters leaves the other stages' draws intact.
const S_COMMUNITY: u64 = 1;
const S_FOLLOW: u64 = 2;
const S_CONTENT: u64 = 3;
const S_ENGAGE: u64 = 4;
const S_REALIZE: u64 = 5;
const S_FUTURE: u64 = 6;

struct Event {
    user: usize,
    post: usize,
    kind: EdgeKind,
    stance: Stance,
    step: usize,
}

/// Assign distinct timestamps: step `s` spans `[base + s·STEP_SECS, base + (s+1)·STEP_SECS)`.
fn stamp(events: &mut [Event], base: i64, rng: &mut ChaCha8Rng) -> Result<Vec<i64>, SynthError> {
    events.shuffle(rng);
    events.sort_by_key(|e| e.step);
    let mut out = Vec::with_capacity(events.len());
    let mut prev_step = usize::MAX;
    let mut within = 0i64;
    for e in events.iter() {
        if e.step != prev_step {
            prev_step = e.step;
            within = 0;
        }
        if within >= STEP_SECS {
            return Err(SynthError::ConfigInvalid("too many events per step; raise the step count".into()));
        }
        out.push(base + e.step as i64 * STEP_SECS + within);
        within += 1;
    }
    Ok(out)
}

struct Layout {
    community: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// Home community of each post; misinformation posts have none.
    home: Vec<Option<usize>>,
    misinfo: Vec<usize>,
    regular_by_home: Vec<Vec<usize>>,
    regular: Vec<usize>,
}

fn receptive(community: usize) -> bool {
    community.is_multiple_of(2)
}

impl Layout {
    fn aligned(&self, user: usize, post: usize) -> bool {
        let c = self.community[user];
        match self.home[post] {
            None => receptive(c),
            Some(h) => h == c,
        }
    }

    fn stance(&self, cfg: &SynthConfig, user: usize, post: usize, rng: &mut ChaCha8Rng) -> Stance {
        if self.aligned(user, post) {
            if rng.gen_bool(cfg.p_support) {
                Stance::Support
            } else {
                Stance::Neutral
            }
        } else if rng.gen_bool(cfg.p_oppose) {
            Stance::Oppose
        } else {
            Stance::Neutral
        }
    }
}

fn user_id(i: usize) -> String {
    format!("u{i:05}")
}

fn post_id(i: usize) -> String {
    format!("p{i:05}")
}

fn engagement_kind(rng: &mut ChaCha8Rng) -> EdgeKind {
    match rng.gen_range(0..10) {
        0..=4 => EdgeKind::Retweets,
        5..=7 => EdgeKind::Replies,
        _ => EdgeKind::Quotes,
    }
}

/// Generate a graph spanning the history and future periods, plus the ground truth
/// that drove every future edge.
pub fn generate(config: &SynthConfig) -> Result<(HeteroGraph, GroundTruth), SynthError> {
    config.validate()?;
    let cfg = config.resolved();
    let (n_u, n_p, n_c) = (cfg.n_users, cfg.n_posts, cfg.n_communities);
    let n_mis = cfg.n_misinfo();

    // communities: balanced round-robin, shuffled
    let mut rng = stream_rng(cfg.seed, S_COMMUNITY);
    let mut community: Vec<usize> = (0..n_u).map(|i| i % n_c).collect();
    community.shuffle(&mut rng);
    let mut members = vec![Vec::new(); n_c];
    for (u, &c) in community.iter().enumerate() {
        members[c].push(u);
    }
    let mut home = vec![None; n_p];
    let mut regular_by_home = vec![Vec::new(); n_c];
    let mut regular = Vec::new();
    for (p, h) in home.iter_mut().enumerate().skip(n_mis) {
        let c = (p - n_mis) % n_c;
        *h = Some(c);
        regular_by_home[c].push(p);
        regular.push(p);
    }
    let layout = Layout { community, members, home, misinfo: (0..n_mis).collect(), regular_by_home, regular };

    let mut g = HeteroGraph::new();

    // content and authorship
    let mut rng = stream_rng(cfg.seed, S_CONTENT);
    let receptive_users: Vec<usize> = (0..n_u).filter(|&u| receptive(layout.community[u])).collect();
    let mut author = Vec::with_capacity(n_p);
    for p in 0..n_p {
        let pool = match layout.home[p] {
            Some(c) => &layout.members[c],
            None if !receptive_users.is_empty() => &receptive_users,
            None => &layout.members[0],
        };
        let a = if pool.is_empty() { rng.gen_range(0..n_u) } else { pool[rng.gen_range(0..pool.len())] };
        author.push(a);
    }
    let mut authored = vec![0u64; n_u];
    for &a in &author {
        authored[a] += 1;
    }
    for (u, &post_count) in authored.iter().enumerate() {
        let n_words = rng.gen_range(3..8);
        let attrs = UserAttrs {
            description: words(&mut rng, n_words),
            post_count,
            account_age_days: rng.gen_range(30..3000),
            verified: rng.gen_bool(0.02),
        };
        g.add_node(NodeRecord::user(user_id(u), attrs))?;
    }
    let n_claims = n_mis.div_ceil(2).max(1);
    for p in 0..n_p {
        let is_misinfo = layout.home[p].is_none();
        let n_words = rng.gen_range(5..12);
        let attrs = PostAttrs {
            text: words(&mut rng, n_words),
            claim_id: is_misinfo.then(|| format!("claim{}", p % n_claims)),
            is_misinfo,
            created_ts: EPOCH_START,
        };
        g.add_node(NodeRecord::post(post_id(p), attrs))?;
    }
    for a in 0..n_mis {
        for b in (a + 1)..n_mis {
            if a % n_claims == b % n_claims {
                g.add_edge(Edge::new(post_id(a), post_id(b), EdgeKind::SameClaim))?;
            }
        }
    }

    // follows
    let mut rng = stream_rng(cfg.seed, S_FOLLOW);
    for u in 0..n_u {
        let c = layout.community[u];
        let inside: Vec<usize> = layout.members[c].iter().copied().filter(|&v| v != u).collect();
        let mut followees = BTreeSet::new();
        let k_in = Binomial::new(inside.len() as u64, cfg.p_follow_in).expect("valid binomial").sample(&mut rng);
        for i in index::sample(&mut rng, inside.len(), k_in as usize) {
            followees.insert(inside[i]);
        }
        let n_out = n_u - layout.members[c].len();
        let k_out = Binomial::new(n_out as u64, cfg.p_follow_out).expect("valid binomial").sample(&mut rng);
        let mut added = 0;
        while added < k_out && n_out > 0 {
            let v = rng.gen_range(0..n_u);
            if layout.community[v] != c && followees.insert(v) {
                added += 1;
            }
        }
        for v in followees {
            g.add_edge(Edge::new(user_id(u), user_id(v), EdgeKind::Follows))?;
        }
    }

    // history: authorship at step 0, engagements afterwards
    let mut rng = stream_rng(cfg.seed, S_ENGAGE);
    let mut events: Vec<Event> = (0..n_p)
        .map(|p| Event { user: author[p], post: p, kind: EdgeKind::Posts, stance: Stance::Support, step: 0 })
        .collect();
    let mut engaged: BTreeSet<(usize, usize)> = (0..n_p).map(|p| (author[p], p)).collect();
    let poisson = (cfg.mean_engagements > 0.0).then(|| Poisson::new(cfg.mean_engagements).expect("valid poisson"));
    let mut engage = |u: usize, p: usize, rng: &mut ChaCha8Rng, events: &mut Vec<Event>| {
        if engaged.insert((u, p)) {
            let kind = engagement_kind(rng);
            let stance = layout.stance(&cfg, u, p, rng);
            events.push(Event { user: u, post: p, kind, stance, step: rng.gen_range(1..=cfg.history_steps) });
        }
    };
    let misinfo_rate = cfg.misinfo_engage_rate();
    for u in 0..n_u {
        let k = poisson.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
        if !layout.regular.is_empty() {
            for _ in 0..k {
                let local = &layout.regular_by_home[layout.community[u]];
                let p = if !local.is_empty() && rng.gen_bool(cfg.home_affinity) {
                    *local.choose(&mut rng).expect("non-empty")
                } else {
                    *layout.regular.choose(&mut rng).expect("non-empty")
                };
                engage(u, p, &mut rng, &mut events);
            }
        }
        if rng.gen_bool(cfg.misinfo_active_frac) {
            for &p in &layout.misinfo {
                if rng.gen_bool(misinfo_rate) {
                    engage(u, p, &mut rng, &mut events);
                }
            }
        }
    }
    let ts = stamp(&mut events, EPOCH_START, &mut rng)?;
    for (e, t) in events.iter().zip(&ts) {
        g.add_edge(Edge::new(user_id(e.user), post_id(e.post), e.kind).with_ts(*t).with_stance(e.stance))?;
    }
    let history_end = cfg.history_end();

    // exposures on the history snapshot
    let exposures = path_multiplicities(&g, &PathConfig::default())?;

    // future: one Bernoulli draw per candidate pair, in a fixed order
    let mut realize = stream_rng(cfg.seed, S_REALIZE);
    let mut rng = stream_rng(cfg.seed, S_FUTURE);
    let mut records = Vec::new();
    let mut future = Vec::new();
    for &p in &layout.misinfo {
        for u in 0..n_u {
            if engaged.contains(&(u, p)) {
                continue;
            }
            let (uid, pid) = (NodeId::new(user_id(u)), NodeId::new(post_id(p)));
            let x = exposures.get(&(uid.clone(), pid.clone())).copied().unwrap_or_default();
            let p_star = ground_truth_probability(&x, &cfg);
            let realized = realize.gen::<f64>() < p_star;
            if realized {
                let kind = engagement_kind(&mut rng);
                let stance = layout.stance(&cfg, u, p, &mut rng);
                future.push(Event { user: u, post: p, kind, stance, step: rng.gen_range(0..cfg.horizon_steps) });
            }
            records.push(GroundTruthRecord {
                user: uid,
                post: pid,
                x_fsp: x.fsp,
                x_fop: x.fop,
                x_esp: x.esp,
                x_eop: x.eop,
                p_star,
                realized,
            });
        }
    }
    let ts = stamp(&mut future, history_end + 1, &mut rng)?;
    for (e, t) in future.iter().zip(&ts) {
        g.add_edge(Edge::new(user_id(e.user), post_id(e.post), e.kind).with_ts(*t).with_stance(e.stance))?;
    }
    records.sort_by(|a, b| (&a.user, &a.post).cmp(&(&b.user, &b.post)));
    Ok((g, GroundTruth { history_end, records }))
}

/// Exposure of every candidate pair, keyed for lookup.
pub fn exposure_map(records: &[GroundTruthRecord]) -> BTreeMap<(NodeId, NodeId), Exposure> {
    records.iter().map(|r| ((r.user.clone(), r.post.clone()), r.exposure())).collect()
}
