mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_graph, RandSpec};
use stancegraph::graph::{PostAttrs, UserAttrs};
use stancegraph::paths::materialize;
use stancegraph::synthgen::{generate, SynthConfig};
use stancegraph::training::{
    build_examples, compute_auc, evaluate, first_propagation, temporal_split, train, train_with_split, SplitSpec,
    TrainConfig, Window, WindowData,
};
use stancegraph::{
    Edge, EdgeKind, HeteroGraph, ModelConfig, NodeId, NodeRecord, PathConfig, PathKind, Stance, StanceGnnModel,
    TrainError,
};

fn pair_count_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] < 0.5 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] >= 0.5 {
                continue;
            }
            total += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / total
}

fn one_post_per_edge(ts: &[i64]) -> HeteroGraph {
    let mut g = HeteroGraph::new();
    g.add_node(NodeRecord::user("u", UserAttrs::default())).unwrap();
    for (i, &t) in ts.iter().enumerate() {
        let p = format!("p{i:04}");
        g.add_node(NodeRecord::post(&p, PostAttrs { is_misinfo: true, ..Default::default() })).unwrap();
        g.add_edge(Edge::new("u", p.as_str(), EdgeKind::Retweets).with_ts(t).with_stance(Stance::Neutral)).unwrap();
    }
    g
}

fn window_counts(ts: &[i64], spec: &SplitSpec) -> [usize; 3] {
    let train = ts.iter().filter(|&&t| t <= spec.t_train_end).count();
    let val = ts.iter().filter(|&&t| t > spec.t_train_end && t <= spec.t_val_end).count();
    [train, val, ts.len() - train - val]
}

#[test]
fn ties_at_a_boundary_join_the_earlier_window() {
    let mut ts: Vec<i64> = (1..=15).collect();
    ts.extend([16, 16, 18, 19, 20]);
    let g = one_post_per_edge(&ts);
    let spec = temporal_split(&g).unwrap();
    assert_eq!(spec.t_train_end, 16);
    assert_eq!(window_counts(&ts, &spec), [17, 1, 2]);
}

#[test]
fn three_positives_make_six_examples() {
    let mut g = HeteroGraph::new();
    for i in 0..6 {
        g.add_node(common::user(&format!("u{i}"), "")).unwrap();
    }
    for i in 0..3 {
        g.add_node(common::post(&format!("m{i}"), "", true)).unwrap();
    }
    for i in 0..3 {
        g.add_edge(common::interaction(
            &format!("u{i}"),
            &format!("m{i}"),
            EdgeKind::Retweets,
            10 + i as i64,
            Stance::Support,
        ))
        .unwrap();
    }
    let spec = SplitSpec { t_train_start: 5, t_train_end: 20, t_val_end: 30, t_test_end: 40 };
    let ex = build_examples(&g, &spec, Window::Train, 1, 3, false).unwrap();
    assert_eq!(ex.len(), 6);
    assert_eq!(ex.iter().filter(|e| e.label == 1).count(), 3);
    assert!(build_examples(&g, &spec, Window::Val, 1, 3, false).unwrap().is_empty());
    assert!(matches!(
        build_examples(&g, &spec, Window::Train, 6, 3, false),
        Err(TrainError::NotEnoughNegatives { available: 15, needed: 18 })
    ));
}

#[test]
fn examples_match_exhaustive_pair_scan() {
    let g = random_graph(4, &RandSpec { n_users: 14, n_posts: 6, max_ts: 40, ..RandSpec::default() });
    assert_eq!(g.node_count(), 20);
    let spec = SplitSpec { t_train_start: 10, t_train_end: 25, t_val_end: 32, t_test_end: 40 };
    for window in Window::ALL {
        let (start, end) = spec.bounds(window);
        let mut positives = BTreeSet::new();
        let mut pool = BTreeSet::new();
        for u in g.users() {
            for p in g.posts().filter(|p| p.is_misinfo_post()) {
                let times: Vec<i64> = g
                    .edges()
                    .iter()
                    .filter(|e| e.kind.is_interaction() && e.src == u.id && e.dst == p.id)
                    .map(|e| e.ts.unwrap())
                    .collect();
                let first = times.iter().min().copied();
                match first {
                    Some(t) if start < t && t <= end => {
                        positives.insert((u.id.clone(), p.id.clone()));
                    }
                    Some(t) if t <= end => {}
                    _ => {
                        pool.insert((u.id.clone(), p.id.clone()));
                    }
                }
            }
        }
        let ex = build_examples(&g, &spec, window, 1, 9, false).unwrap();
        let got_pos: BTreeSet<_> =
            ex.iter().filter(|e| e.label == 1).map(|e| (e.user.clone(), e.post.clone())).collect();
        let negs: Vec<_> = ex.iter().filter(|e| e.label == 0).map(|e| (e.user.clone(), e.post.clone())).collect();
        assert_eq!(got_pos, positives, "{window}");
        assert_eq!(negs.len(), positives.len());
        assert_eq!(negs.iter().collect::<BTreeSet<_>>().len(), negs.len(), "sampled without replacement");
        assert!(negs.iter().all(|n| pool.contains(n)), "{window}");
        assert!(ex.iter().all(|e| e.window == window));
        assert_eq!(ex, build_examples(&g, &spec, window, 1, 9, false).unwrap());
    }
}

#[test]
fn negatives_cover_the_pool_uniformly() {
    // one positive and a pool of four candidates, sampled one at a time over many seeds
    let mut g = HeteroGraph::new();
    for u in ["a", "b", "c", "d", "e"] {
        g.add_node(common::user(u, "")).unwrap();
    }
    g.add_node(common::post("m", "", true)).unwrap();
    g.add_edge(common::interaction("a", "m", EdgeKind::Retweets, 5, Stance::Support)).unwrap();
    let spec = SplitSpec { t_train_start: 1, t_train_end: 10, t_val_end: 20, t_test_end: 30 };
    let mut counts: BTreeMap<NodeId, usize> = BTreeMap::new();
    let n = 4000;
    for seed in 0..n {
        let ex = build_examples(&g, &spec, Window::Train, 1, seed, false).unwrap();
        let neg = ex.iter().find(|e| e.label == 0).unwrap();
        *counts.entry(neg.user.clone()).or_default() += 1;
    }
    assert_eq!(counts.len(), 4);
    // binomial(4000, 0.25): sd ≈ 27.4
    for c in counts.values() {
        assert!((*c as f64 - 1000.0).abs() < 5.0 * 27.4, "{counts:?}");
    }
}

#[test]
fn mentions_of_an_author_count_only_when_enabled() {
    let mut g = HeteroGraph::new();
    for u in ["author", "fan"] {
        g.add_node(common::user(u, "")).unwrap();
    }
    g.add_node(common::post("m", "", true)).unwrap();
    g.add_edge(common::interaction("author", "m", EdgeKind::Posts, 3, Stance::Support)).unwrap();
    g.add_edge(Edge::new("fan", "author", EdgeKind::Mentions).with_ts(7)).unwrap();
    g.add_edge(Edge::new("fan", "author", EdgeKind::Mentions).with_ts(2)).unwrap();
    let key = (NodeId::new("fan"), NodeId::new("m"));
    assert!(!first_propagation(&g, false).contains_key(&key));
    // the mention at ts 2 predates the post and does not count
    assert_eq!(first_propagation(&g, true)[&key], 7);
}

fn tiny_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 1,
        model: ModelConfig { hash_buckets: 8, d_emb: 6, n_layers: 1, mlp_hidden: 6, ..ModelConfig::default() },
        ..TrainConfig::default()
    }
}

fn small_synth(seed: u64) -> HeteroGraph {
    let cfg = SynthConfig { n_users: 120, n_posts: 16, seed, ..SynthConfig::default() };
    generate(&cfg).unwrap().0
}

#[test]
fn one_epoch_records_one_uniform_trajectory_row() {
    let g = small_synth(1);
    let (_, report) = train(&g, &tiny_train_config()).unwrap();
    assert_eq!(report.attention_trajectory, vec![[0.2; 5]]);
    assert_eq!(report.loss_curve.len(), 1);
    assert_eq!(report.epochs_run, 1);
}

#[test]
fn main_only_report_ignores_stance_labels() {
    let g = small_synth(2);
    let cfg = TrainConfig {
        epochs: 3,
        model: ModelConfig { enabled_paths: vec![PathKind::Main], ..tiny_train_config().model },
        ..tiny_train_config()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut perturbed = HeteroGraph::new();
    for n in g.nodes() {
        perturbed.add_node(n.clone()).unwrap();
    }
    for e in g.edges() {
        let mut e = e.clone();
        if e.stance.is_some() {
            e.stance = Some(*Stance::ALL.choose(&mut rng).unwrap());
        }
        perturbed.add_edge(e).unwrap();
    }
    let (_, a) = train(&g, &cfg).unwrap();
    let (_, b) = train(&perturbed, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn loss_decreases_over_the_first_three_epochs() {
    let (g, _) = generate(&SynthConfig { seed: 7, ..SynthConfig::default() }).unwrap();
    let cfg = TrainConfig { epochs: 3, patience: 10, ..TrainConfig::default() };
    let (_, report) = train(&g, &cfg).unwrap();
    let l = &report.loss_curve;
    assert_eq!(l.len(), 3);
    assert!(l[0] > l[1] && l[1] > l[2], "{l:?}");
}

#[test]
fn zero_classifier_scores_half_and_evaluation_repeats() {
    let g = small_synth(3);
    let cfg = tiny_train_config();
    let spec = temporal_split(&g).unwrap();
    let mut model = StanceGnnModel::new(cfg.model.clone(), 0).unwrap();
    let first = evaluate(&model, &g, &spec, Window::Test, &cfg).unwrap();
    assert_eq!(first, evaluate(&model, &g, &spec, Window::Test, &cfg).unwrap());
    model.zero_classifier();
    assert_eq!(evaluate(&model, &g, &spec, Window::Test, &cfg).unwrap(), 0.5);
}

/// Adds edges that no window may see: one on an already-linked pair inside the
/// test window and one for a fresh pair after the horizon.
fn with_future_edges(g: &HeteroGraph, spec: &SplitSpec) -> HeteroGraph {
    let first = first_propagation(g, false);
    let ((u, p), _) = first.iter().find(|(_, &t)| t <= spec.t_train_start).expect("an early link");
    let mut out = g.clone();
    out.add_edge(
        Edge::new(u.as_str(), p.as_str(), EdgeKind::Replies).with_ts(spec.t_val_end + 1).with_stance(Stance::Oppose),
    )
    .unwrap();
    let fresh = g
        .users()
        .flat_map(|u| g.posts().filter(|p| p.is_misinfo_post()).map(move |p| (u.id.clone(), p.id.clone())))
        .find(|k| !first.contains_key(k))
        .unwrap();
    out.add_edge(
        Edge::new(fresh.0.as_str(), fresh.1.as_str(), EdgeKind::Quotes)
            .with_ts(spec.t_test_end + 100)
            .with_stance(Stance::Oppose),
    )
    .unwrap();
    out
}

#[test]
fn future_edges_change_no_snapshot_path_or_score() {
    let g = small_synth(4);
    let cfg = TrainConfig { epochs: 3, ..tiny_train_config() };
    let spec = temporal_split(&g).unwrap();
    let leaked = with_future_edges(&g, &spec);
    assert_eq!(leaked.edge_count(), g.edge_count() + 2);

    for w in Window::ALL {
        let t = spec.start(w);
        let a = materialize(&g.snapshot_before(t), &PathConfig::default()).unwrap();
        let b = materialize(&leaked.snapshot_before(t), &PathConfig::default()).unwrap();
        assert_eq!(a.derived, b.derived, "{w}");
        assert!(leaked.snapshot_before(t).edges().iter().all(|e| e.ts.is_none_or(|ts| ts <= t)));
    }

    let (model_a, report_a) = train_with_split(&g, &cfg, &spec).unwrap();
    let (model_b, report_b) = train_with_split(&leaked, &cfg, &spec).unwrap();
    assert_eq!(serde_json::to_string(&report_a).unwrap(), serde_json::to_string(&report_b).unwrap());
    for w in Window::ALL {
        let a = WindowData::build(&g, &spec, w, &cfg, &cfg.model).unwrap().scores(&model_a).unwrap();
        let b = WindowData::build(&leaked, &spec, w, &cfg, &cfg.model).unwrap().scores(&model_b).unwrap();
        assert_eq!(a, b, "{w}");
    }
}

#[test]
fn identical_inputs_give_identical_reports() {
    let g = small_synth(6);
    let cfg = TrainConfig { epochs: 4, ..tiny_train_config() };
    let (_, a) = train(&g, &cfg).unwrap();
    let (_, b) = train(&g, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for row in &a.attention_trajectory {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_counts_are_within_one_of_8_1_1(n in 10usize..400, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ts: Vec<i64> = (0..(n as i64 * 10)).collect();
        ts.shuffle(&mut rng);
        ts.truncate(n);
        let g = one_post_per_edge(&ts);
        let spec = temporal_split(&g).unwrap();
        let [train, val, test] = window_counts(&ts, &spec);
        let nf = n as f64;
        prop_assert!((train as f64 - 0.8 * nf).abs() <= 1.0, "{} {} {}", train, val, test);
        prop_assert!((val as f64 - 0.1 * nf).abs() <= 1.0, "{} {} {}", train, val, test);
        prop_assert!((test as f64 - 0.1 * nf).abs() <= 1.0, "{} {} {}", train, val, test);
    }

    #[test]
    fn auc_matches_pair_counting(len in 2usize..120, levels in 1u32..12, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = (0..len).map(|_| rng.gen_range(0..levels) as f64 / 3.0).collect();
        let mut labels: Vec<f64> = (0..len).map(|_| rng.gen_range(0..2) as f64).collect();
        labels[0] = 1.0;
        labels[1] = 0.0;
        let auc = compute_auc(&scores, &labels).unwrap();
        prop_assert!((auc - pair_count_auc(&scores, &labels)).abs() <= 1e-12);
        // strictly monotone transforms leave the ranking unchanged
        for f in [|x: f64| 3.0 * x - 7.0, |x: f64| x.exp(), |x: f64| x * x * x] {
            let t: Vec<f64> = scores.iter().map(|&x| f(x)).collect();
            prop_assert!((compute_auc(&t, &labels).unwrap() - auc).abs() <= 1e-12);
        }
    }
}
