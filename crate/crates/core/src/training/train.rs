use std::io::Write;
use std::path::Path;

use log::{debug, info};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::auc::compute_auc;
use super::examples::{build_examples, stream_rng, Example};
use super::split::{temporal_split_with, SplitSpec, Window};
use crate::error::{GraphError, TrainError};
use crate::gnn::{
    attention_weights, config_hash, forward_indices, loss_and_backward, GraphView, ModelConfig, StanceGnnModel,
};
use crate::graph::HeteroGraph;
use crate::nn::AdamConfig;
use crate::paths::{materialize, PathConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub lr: f64,
    pub epochs: usize,
    pub patience: usize,
    pub neg_ratio: usize,
    pub batch_size: usize,
    /// Count a mention of a post's author as propagating that post.
    pub count_mentions: bool,
    /// Share of interaction edges whose first propagations serve as training labels.
    pub train_window_frac: f64,
    pub model: ModelConfig,
    pub paths: PathConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            lr: 1e-3,
            epochs: 100,
            patience: 10,
            neg_ratio: 1,
            batch_size: 128,
            count_mentions: false,
            train_window_frac: 0.1,
            model: ModelConfig::default(),
            paths: PathConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.neg_ratio == 0 {
            return bad("neg_ratio must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        self.model.validate().map_err(TrainError::Config)
    }

    pub fn config_hash(&self) -> String {
        config_hash(&self.model, &self.paths)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowAuc {
    pub train: Option<f64>,
    pub val: Option<f64>,
    pub test: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Everything a training run reports. Contains no wall-clock data, so equal
/// inputs serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub config_hash: String,
    pub enabled_paths: Vec<crate::paths::PathKind>,
    pub split: SplitSpec,
    pub examples: WindowCounts,
    /// AUC of the returned model; `None` when a window lacks one of the classes.
    pub auc: WindowAuc,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
    pub val_auc_curve: Vec<Option<f64>>,
    /// Attention weights at the start of each epoch, `[main, fsp, fop, esp, eop]`.
    pub attention_trajectory: Vec<[f64; 5]>,
    /// Attention weights of the returned model.
    pub final_attention: [f64; 5],
    pub best_epoch: usize,
    pub epochs_run: usize,
}

impl MetricsReport {
    pub fn write_trajectory_csv(&self, path: &Path) -> Result<(), GraphError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "epoch,main,fsp,fop,esp,eop")?;
        for (e, w) in self.attention_trajectory.iter().enumerate() {
            writeln!(f, "{e},{},{},{},{},{}", w[0], w[1], w[2], w[3], w[4])?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Examples of one window resolved against the graph as of that window's start.
pub struct WindowData {
    pub view: GraphView,
    pub examples: Vec<Example>,
    users: Vec<usize>,
    posts: Vec<usize>,
    labels: Vec<f64>,
}

impl WindowData {
    pub fn build(
        g: &HeteroGraph,
        spec: &SplitSpec,
        window: Window,
        cfg: &TrainConfig,
        model: &ModelConfig,
    ) -> Result<Self, TrainError> {
        let snapshot = g.snapshot_before(spec.start(window));
        let paths = if model.uses_derived_paths() { Some(materialize(&snapshot, &cfg.paths)?) } else { None };
        let view = GraphView::build(&snapshot, paths.as_ref(), model);
        let examples = build_examples(g, spec, window, cfg.neg_ratio, cfg.seed, cfg.count_mentions)?;
        let users = examples.iter().map(|e| view.index_of(&e.user).expect("example user in graph")).collect();
        let posts = examples.iter().map(|e| view.index_of(&e.post).expect("example post in graph")).collect();
        let labels = examples.iter().map(|e| e.label as f64).collect();
        Ok(WindowData { view, examples, users, posts, labels })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn scores(&self, model: &StanceGnnModel) -> Result<Vec<f64>, TrainError> {
        if self.is_empty() {
            return Ok(Vec::new());
        }
        Ok(forward_indices(&self.view, model, &self.users, &self.posts)?)
    }

    pub fn auc(&self, model: &StanceGnnModel) -> Result<f64, TrainError> {
        compute_auc(&self.scores(model)?, &self.labels)
    }

    fn auc_opt(&self, model: &StanceGnnModel) -> Result<Option<f64>, TrainError> {
        match self.auc(model) {
            Ok(a) => Ok(Some(a)),
            Err(TrainError::SingleClass) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

const SHUFFLE_STREAM: u64 = 16;

/// Split `g` in time and train.
pub fn train(g: &HeteroGraph, cfg: &TrainConfig) -> Result<(StanceGnnModel, MetricsReport), TrainError> {
    let spec = temporal_split_with(g, cfg.train_window_frac)?;
    train_with_split(g, cfg, &spec)
}

/// Mini-batch Adam on binary cross-entropy with early stopping on validation AUC.
///
/// The training window is predicted from the graph as of `t_train_start`, and
/// validation from the graph as of `t_train_end`. The model with the best
/// validation AUC is returned; without validation positives, the last epoch's.
pub fn train_with_split(
    g: &HeteroGraph,
    cfg: &TrainConfig,
    spec: &SplitSpec,
) -> Result<(StanceGnnModel, MetricsReport), TrainError> {
    cfg.validate()?;
    let train_data = WindowData::build(g, spec, Window::Train, cfg, &cfg.model)?;
    let val_data = WindowData::build(g, spec, Window::Val, cfg, &cfg.model)?;
    if train_data.is_empty() {
        let (start, end) = spec.bounds(Window::Train);
        return Err(TrainError::NoTrainingPositives { start, end });
    }
    info!("examples: train {}, val {}; {} nodes", train_data.len(), val_data.len(), train_data.view.node_count());

    let mut model = StanceGnnModel::new(cfg.model.clone(), cfg.seed)?;
    let adam = AdamConfig { lr: cfg.lr, ..Default::default() };
    let mut rng = stream_rng(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_data.len()).collect();

    let mut best = model.params.clone();
    let mut best_auc = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut loss_curve = Vec::new();
    let mut val_auc_curve = Vec::new();
    let mut trajectory = Vec::new();

    for epoch in 0..cfg.epochs {
        trajectory.push(attention_weights(&model));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let us: Vec<usize> = batch.iter().map(|&i| train_data.users[i]).collect();
            let ps: Vec<usize> = batch.iter().map(|&i| train_data.posts[i]).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| train_data.labels[i]).collect();
            let loss = loss_and_backward(&train_data.view, &mut model, &us, &ps, &ys)?;
            model.params.adam_step(&adam);
            total += loss * batch.len() as f64;
        }
        let mean_loss = total / train_data.len() as f64;
        loss_curve.push(mean_loss);
        let val_auc = val_data.auc_opt(&model)?;
        val_auc_curve.push(val_auc);
        debug!("epoch {epoch}: loss {mean_loss:.6}, val auc {val_auc:?}");

        match val_auc {
            Some(a) if a > best_auc => {
                best_auc = a;
                best = model.params.clone();
                best_epoch = epoch;
                since_best = 0;
            }
            Some(_) => since_best += 1,
            None => {
                best = model.params.clone();
                best_epoch = epoch;
            }
        }
        if since_best >= cfg.patience {
            info!("early stop after epoch {epoch}");
            break;
        }
    }
    let epochs_run = loss_curve.len();
    model.params.copy_values_from(&best);

    let test_data = WindowData::build(g, spec, Window::Test, cfg, &cfg.model)?;
    let auc = WindowAuc {
        train: train_data.auc_opt(&model)?,
        val: val_data.auc_opt(&model)?,
        test: test_data.auc_opt(&model)?,
    };
    info!("auc: {auc:?}");
    let report = MetricsReport {
        seed: cfg.seed,
        config_hash: cfg.config_hash(),
        enabled_paths: cfg.model.paths(),
        split: *spec,
        examples: WindowCounts { train: train_data.len(), val: val_data.len(), test: test_data.len() },
        auc,
        loss_curve,
        val_auc_curve,
        attention_trajectory: trajectory,
        final_attention: attention_weights(&model),
        best_epoch,
        epochs_run,
    };
    Ok((model, report))
}

/// AUC of `model` on one window, seeing only the graph as of the window's start.
pub fn evaluate(
    model: &StanceGnnModel,
    g: &HeteroGraph,
    spec: &SplitSpec,
    window: Window,
    cfg: &TrainConfig,
) -> Result<f64, TrainError> {
    WindowData::build(g, spec, window, cfg, &model.config)?.auc(model)
}
