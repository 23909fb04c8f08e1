use std::path::Path;

use anyhow::anyhow;
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use stancegraph::gnn::StanceGnnModel;
use stancegraph::graph::HeteroGraph;
use stancegraph::nn::Checkpoint;
use stancegraph::paths::{materialize, PathConfig, PathKind};
use stancegraph::stance::{label_graph_stances, stance_queries, BareReshareStance, LabelOptions, LexiconProvider};
use stancegraph::synthgen::{generate, SynthConfig};
use stancegraph::training::{evaluate, temporal_split_with, train, MetricsReport, TrainConfig, Window};

use crate::config::{flag, opt, resolve};
use crate::error::{CliError, CliResult, Context};
use crate::exec::exec_provider;
use crate::manifest::{read_manifest, ManifestBuilder};
use crate::{EvalArgs, GraphArgs, LabelArgs, PathsArgs, ReportArgs, SynthArgs, TrainArgs};

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).context_runtime(|| format!("creating {}", dir.display()))
}

fn load_graph(args: &GraphArgs) -> CliResult<HeteroGraph> {
    HeteroGraph::load_jsonl_with(&args.nodes, &args.edges, args.lenient)
        .context_runtime(|| format!("loading {} and {}", args.nodes.display(), args.edges.display()))
}

fn record_graph_inputs(m: &mut ManifestBuilder, args: &GraphArgs) -> CliResult<()> {
    m.input(&args.nodes)?;
    m.input(&args.edges)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").context_runtime(|| format!("writing {}", path.display()))
}

pub fn synth(args: SynthArgs) -> CliResult<()> {
    let cfg: SynthConfig = resolve(
        args.config.as_deref(),
        vec![
            ("size_preset", opt(&args.preset)),
            ("seed", opt(&args.seed)),
            ("n_users", opt(&args.n_users)),
            ("n_posts", opt(&args.n_posts)),
            ("beta_fsp", opt(&args.beta_fsp)),
            ("beta_fop", opt(&args.beta_fop)),
            ("beta_esp", opt(&args.beta_esp)),
            ("beta_eop", opt(&args.beta_eop)),
            ("b0", opt(&args.b0)),
        ],
    )?;
    // record the sizes actually generated
    let cfg = cfg.resolved();
    let mut m = ManifestBuilder::new("synth", &cfg, Some(cfg.seed));
    if let Some(p) = &args.config {
        m.input(p)?;
    }
    let (g, truth) = generate(&cfg)?;
    create_dir(&args.out)?;
    g.save_jsonl(&args.out.join("nodes.jsonl"), &args.out.join("edges.jsonl"))
        .context_runtime(|| "writing graph".into())?;
    truth.write_jsonl(&args.out.join("ground_truth.jsonl")).context_runtime(|| "writing ground truth".into())?;
    info!(
        "{} users, {} edges, {} of {} candidate pairs realized",
        g.users().count(),
        g.edge_count(),
        truth.realized_count(),
        truth.records.len()
    );
    m.finish(&args.out, &["nodes.jsonl", "edges.jsonl", "ground_truth.jsonl"])?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// `lexicon` or `exec:<shell command>`.
    pub provider: String,
    pub bare_reshare_stance: BareReshareStance,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig { provider: "lexicon".into(), bare_reshare_stance: BareReshareStance::default() }
    }
}

pub fn label(args: LabelArgs) -> CliResult<()> {
    let cfg: LabelConfig = resolve(
        args.config.as_deref(),
        vec![("provider", opt(&args.provider)), ("bare_reshare_stance", opt(&args.bare_reshare_stance))],
    )?;
    let opts = LabelOptions { bare_reshare_stance: cfg.bare_reshare_stance };
    let mut m = ManifestBuilder::new("label", &cfg, None);
    record_graph_inputs(&mut m, &args.graph)?;
    let g = load_graph(&args.graph)?;
    let labeled = if cfg.provider == "lexicon" {
        label_graph_stances(&g, &LexiconProvider, &opts)
    } else if let Some(cmd) = cfg.provider.strip_prefix("exec:") {
        let queries = stance_queries(&g, &opts);
        info!("asking `{cmd}` about {} edges", queries.len());
        let table = exec_provider(cmd, &queries)?;
        label_graph_stances(&g, &table, &opts)
    } else {
        return Err(CliError::Config(format!(
            "unknown provider `{}` (expected `lexicon` or `exec:<command>`)",
            cfg.provider
        )));
    };
    create_dir(&args.out)?;
    labeled
        .save_jsonl(&args.out.join("nodes.jsonl"), &args.out.join("edges.jsonl"))
        .context_runtime(|| "writing labeled graph".into())?;
    m.finish(&args.out, &["nodes.jsonl", "edges.jsonl"])?;
    Ok(())
}

pub fn paths(args: PathsArgs) -> CliResult<()> {
    let cfg: PathConfig = resolve(
        args.config.as_deref(),
        vec![
            ("paths_all_posts", flag(args.paths_all_posts)),
            ("co_engage_window_secs", opt(&args.co_engage_window_secs)),
        ],
    )?;
    let mut m = ManifestBuilder::new("paths", &cfg, None);
    record_graph_inputs(&mut m, &args.graph)?;
    let g = load_graph(&args.graph)?;
    let pg = materialize(&g, &cfg).context_runtime(|| "building derived paths".into())?;
    for (kind, set) in &pg.derived {
        info!("{kind}: {} derived edges", set.len());
    }
    create_dir(&args.out)?;
    pg.write_jsonl(&args.out.join("paths.jsonl")).context_runtime(|| "writing paths".into())?;
    m.finish(&args.out, &["paths.jsonl"])?;
    Ok(())
}

fn parse_paths(list: &str) -> CliResult<Vec<PathKind>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<PathKind>().map_err(CliError::Config))
        .collect()
}

fn train_config(args: &TrainArgs) -> CliResult<TrainConfig> {
    let enabled = args.enabled_paths.as_deref().map(parse_paths).transpose()?;
    let cfg: TrainConfig = resolve(
        args.config.as_deref(),
        vec![
            ("seed", opt(&args.seed)),
            ("lr", opt(&args.lr)),
            ("epochs", opt(&args.epochs)),
            ("patience", opt(&args.patience)),
            ("neg_ratio", opt(&args.neg_ratio)),
            ("batch_size", opt(&args.batch_size)),
            ("count_mentions", flag(args.count_mentions)),
            ("train_window_frac", opt(&args.train_window_frac)),
            ("model.d_emb", opt(&args.d_emb)),
            ("model.n_layers", opt(&args.n_layers)),
            ("model.mlp_hidden", opt(&args.mlp_hidden)),
            ("model.hash_buckets", opt(&args.hash_buckets)),
            ("model.enabled_paths", opt(&enabled)),
            ("model.stance_typed_relations", flag(args.stance_typed_relations)),
            ("paths.paths_all_posts", flag(args.paths_all_posts)),
            ("paths.co_engage_window_secs", opt(&args.co_engage_window_secs)),
        ],
    )?;
    cfg.validate()?;
    Ok(cfg)
}

fn train_one(g: &HeteroGraph, cfg: &TrainConfig, args: &TrainArgs, out: &Path) -> CliResult<()> {
    let mut m = ManifestBuilder::new("train", cfg, Some(cfg.seed)).config_hash(cfg.config_hash());
    record_graph_inputs(&mut m, &args.graph)?;
    if let Some(p) = &args.config {
        m.input(p)?;
    }
    let (model, report) = train(g, cfg).context_runtime(|| format!("training seed {}", cfg.seed))?;
    create_dir(out)?;
    write_json(&out.join("checkpoint.json"), &model.params.to_checkpoint(&report.config_hash))?;
    write_json(&out.join("metrics.json"), &report)?;
    report
        .write_trajectory_csv(&out.join("attention_trajectory.csv"))
        .context_runtime(|| "writing attention trajectory".into())?;
    m.finish(out, &["checkpoint.json", "metrics.json", "attention_trajectory.csv"])?;
    Ok(())
}

pub fn train_cmd(args: TrainArgs) -> CliResult<()> {
    let base = train_config(&args)?;
    let g = load_graph(&args.graph)?;
    let Some(seeds) = &args.seeds else {
        return train_one(&g, &base, &args, &args.out);
    };
    let seeds: Vec<u64> = seeds
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|e| CliError::Config(format!("bad seed `{s}`: {e}"))))
        .collect::<CliResult<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.into()))?;
    pool.install(|| {
        seeds.par_iter().try_for_each(|&seed| {
            let cfg = TrainConfig { seed, ..base.clone() };
            train_one(&g, &cfg, &args, &args.out.join(format!("seed-{seed}")))
        })
    })
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    let window: Window = args.window.parse().map_err(CliError::Config)?;
    let ck_text = std::fs::read_to_string(&args.checkpoint)
        .context_runtime(|| format!("reading {}", args.checkpoint.display()))?;
    let ck: Checkpoint =
        serde_json::from_str(&ck_text).context_runtime(|| format!("parsing {}", args.checkpoint.display()))?;
    let cfg: TrainConfig = match &args.config {
        Some(p) => resolve(Some(p), vec![])?,
        None => {
            let dir = args.checkpoint.parent().unwrap_or(Path::new("."));
            let manifest = read_manifest(&dir.join("manifest.json"))?;
            serde_json::from_value(manifest.config)
                .map_err(|e| CliError::Config(format!("training config in manifest: {e}")))?
        }
    };
    let hash = cfg.config_hash();
    if ck.config_hash != hash {
        return Err(CliError::Compat(format!(
            "checkpoint was trained with config {} but the model config hashes to {hash}",
            ck.config_hash
        )));
    }
    let model = StanceGnnModel::from_checkpoint(cfg.model.clone(), &ck).map_err(|e| CliError::Compat(e.to_string()))?;
    let mut m = ManifestBuilder::new("eval", &cfg, Some(cfg.seed)).config_hash(hash);
    m.input(&args.checkpoint)?;
    record_graph_inputs(&mut m, &args.graph)?;
    let g = load_graph(&args.graph)?;
    let spec = temporal_split_with(&g, cfg.train_window_frac)?;
    let auc = evaluate(&model, &g, &spec, window, &cfg).context_runtime(|| format!("evaluating {window}"))?;
    let result = json!({ "window": window.as_str(), "auc": auc });
    println!("{result}");
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_json(&out.join("eval.json"), &result)?;
        m.finish(out, &["eval.json"])?;
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Directory name of a run; sweep members `<sweep>/seed-<n>` keep their sweep name.
fn run_id(dir: &Path) -> Option<String> {
    let leaf = dir.file_name()?.to_string_lossy().into_owned();
    if !leaf.starts_with("seed-") {
        return Some(leaf);
    }
    match dir.parent().and_then(Path::file_name) {
        Some(sweep) => Some(format!("{}/{leaf}", sweep.to_string_lossy())),
        None => Some(leaf),
    }
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    if args.runs.is_empty() {
        return Err(CliError::Config("at least one run directory is required".into()));
    }
    let mut csv = String::from("run_id,enabled_paths,seed,val_auc,test_auc,w_main,w_fsp,w_fop,w_esp,w_eop\n");
    let mut m = ManifestBuilder::new("report", &json!({ "runs": args.runs }), None);
    for dir in &args.runs {
        let path = dir.join("metrics.json");
        let text = std::fs::read_to_string(&path).context_runtime(|| format!("reading {}", path.display()))?;
        let r: MetricsReport = serde_json::from_str(&text).context_runtime(|| format!("parsing {}", path.display()))?;
        m.input(&path)?;
        let id = run_id(dir).ok_or_else(|| CliError::Runtime(anyhow!("cannot name run {}", dir.display())))?;
        let paths: Vec<&str> = r.enabled_paths.iter().map(|k| k.as_str()).collect();
        let w = r.final_attention;
        csv.push_str(&format!(
            "{id},{},{},{},{},{},{},{},{},{}\n",
            paths.join("+"),
            r.seed,
            fmt_opt(r.auc.val),
            fmt_opt(r.auc.test),
            w[0],
            w[1],
            w[2],
            w[3],
            w[4]
        ));
    }
    match &args.out {
        Some(out) => {
            create_dir(out)?;
            let file = out.join("report.csv");
            std::fs::write(&file, &csv).context_runtime(|| format!("writing {}", file.display()))?;
            m.finish(out, &["report.csv"])?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}
