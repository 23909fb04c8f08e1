//! `stancegraph`: synthesize, label, train and evaluate stance-aware propagation models.

mod commands;
mod config;
mod error;
mod exec;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stancegraph::stance::BareReshareStance;
use stancegraph::synthgen::SizePreset;

#[derive(Parser)]
#[command(name = "stancegraph", version, about = "Stance-aware GNN for misinformation propagation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic stance-labeled graph with ground truth.
    Synth(SynthArgs),
    /// Fill in missing stances on interaction edges.
    Label(LabelArgs),
    /// Materialize the four derived path edge sets.
    Paths(PathsArgs),
    /// Train a model (optionally over several seeds).
    Train(TrainArgs),
    /// Evaluate a checkpoint on one temporal window; prints AUC as JSON.
    Eval(EvalArgs),
    /// Tabulate AUCs and final attention weights across runs.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub nodes: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
    /// Ignore unknown JSON keys instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(SizePreset))]
    pub preset: Option<SizePreset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_users: Option<usize>,
    #[arg(long)]
    pub n_posts: Option<usize>,
    #[arg(long)]
    pub beta_fsp: Option<f64>,
    #[arg(long)]
    pub beta_fop: Option<f64>,
    #[arg(long)]
    pub beta_esp: Option<f64>,
    #[arg(long)]
    pub beta_eop: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b0: Option<f64>,
}

#[derive(Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `lexicon` or `exec:<shell command>`.
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long, value_parser = parse_bare_reshare)]
    pub bare_reshare_stance: Option<BareReshareStance>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_bare_reshare(s: &str) -> Result<BareReshareStance, String> {
    match s {
        "support" => Ok(BareReshareStance::Support),
        "neutral" => Ok(BareReshareStance::Neutral),
        other => Err(format!("expected `support` or `neutral`, got `{other}`")),
    }
}

#[derive(Args)]
pub struct PathsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub paths_all_posts: bool,
    #[arg(long)]
    pub co_engage_window_secs: Option<i64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated seeds; each run goes to `<out>/seed-<n>`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Concurrent runs for a multi-seed sweep.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub neg_ratio: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub count_mentions: bool,
    #[arg(long)]
    pub train_window_frac: Option<f64>,
    #[arg(long)]
    pub d_emb: Option<usize>,
    #[arg(long)]
    pub n_layers: Option<usize>,
    #[arg(long)]
    pub mlp_hidden: Option<usize>,
    #[arg(long)]
    pub hash_buckets: Option<usize>,
    /// Comma-separated subset of main,fsp,fop,esp,eop.
    #[arg(long)]
    pub enabled_paths: Option<String>,
    #[arg(long)]
    pub stance_typed_relations: bool,
    #[arg(long)]
    pub paths_all_posts: bool,
    #[arg(long)]
    pub co_engage_window_secs: Option<i64>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "test")]
    pub window: String,
    /// Training config; defaults to the one recorded next to the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for eval.json and manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Directory for report.csv and manifest.json; prints the table when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STANCEGRAPH_LOG", "error"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Synth(a) => commands::synth(a),
        Cmd::Label(a) => commands::label(a),
        Cmd::Paths(a) => commands::paths(a),
        Cmd::Train(a) => commands::train_cmd(a),
        Cmd::Eval(a) => commands::eval(a),
        Cmd::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
