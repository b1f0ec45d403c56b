//! Command-line interface. Each subcommand is also callable as a function.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{HidamError, Result};
use crate::graph::{coverage_stats, missing_rate_stats, resolve_all, view_groups};
use crate::io::manifest::{parse_toml, read_to_string};
use crate::io::{
    load_checkpoint, load_dataset, save_checkpoint, write_coverage, write_dataset, write_explanations,
    write_history, write_labels, write_lift, write_missing_rates, write_predictions, write_sweep, write_truth,
    Checkpoint, CheckpointMetrics, CoverageRow, Dataset, Prediction, SweepRow,
};
use crate::model::{ModelConfig, Scorer};
use crate::pipeline::{fit_hidam, make_splits};
use crate::synth::{generate, measure_lift, SynthConfig};
use crate::train::{eval_seed, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "hidam", version, about = "Default prediction on banking company networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Link coverage, missing-rate and default-lift reports.
    Stats(StatsArgs),
    /// Generate a synthetic dataset with a manifest.
    Synth(SynthArgs),
    /// Train a model and write its checkpoint and metric history.
    Train(TrainArgs),
    /// Score companies with a trained model.
    Predict(PredictArgs),
    /// Write attention weights for companies.
    Explain(ExplainArgs),
    /// Train once per embedding or semantic dimension and tabulate metrics.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Echoed into report headers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML generator configuration; defaults apply to absent keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub companies: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Overrides the training configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of labels held out as a test set before validation split.
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// File with one company id per line; every company when absent.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Sampling seed; the checkpoint's evaluation seed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Instances kept per meta-path.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for beta.csv and alpha.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Embedding dimensions to try.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Semantic attention dimensions to try.
    #[arg(long, value_delimiter = ',')]
    pub semantic_dims: Vec<usize>,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Result of a command that may have partially succeeded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// Requested ids that were not found and skipped.
    pub skipped: Vec<String>,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(o) if o.skipped.is_empty() => ExitCode::SUCCESS,
        Ok(o) => {
            for id in &o.skipped {
                eprintln!("unknown company id `{id}` skipped");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Stats(a) => cmd_stats(&a),
        Command::Synth(a) => cmd_synth(&a).map(|_| Outcome::default()),
        Command::Train(a) => cmd_train(&a).map(|_| Outcome::default()),
        Command::Predict(a) => cmd_predict(&a),
        Command::Explain(a) => cmd_explain(&a),
        Command::Sweep(a) => cmd_sweep(&a).map(|_| Outcome::default()),
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HidamError::io(dir, e))
}

pub fn cmd_stats(a: &StatsArgs) -> Result<Outcome> {
    let d = load_dataset(&a.manifest)?;
    let g = &d.graph;
    if g.company_count() == 0 {
        return Err(HidamError::InvalidArgument("coverage undefined: the graph has zero companies".into()));
    }
    mkdir(&a.out)?;
    let coverage = g
        .schema()
        .link_types
        .iter()
        .map(|lt| {
            Ok(CoverageRow {
                link_type: lt.name.clone(),
                coverage: coverage_stats(g, &lt.name)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_coverage(&a.out.join("coverage.csv"), a.seed, &coverage)?;
    let groups = view_groups(&resolve_all(&d.catalog, g.schema())?);
    let table = missing_rate_stats(g, &d.feature_sets, &groups)?;
    write_missing_rates(&a.out.join("missing_rates.csv"), a.seed, &table)?;
    if let Some(labels) = &d.labels {
        let lift = measure_lift(g, labels, &groups)?;
        write_lift(&a.out.join("lift.csv"), a.seed, &lift)?;
    }
    Ok(Outcome::default())
}

/// Writes the dataset, manifest and `truth.csv`; returns the manifest path.
pub fn cmd_synth(a: &SynthArgs) -> Result<PathBuf> {
    let mut cfg: SynthConfig = match &a.config {
        Some(p) => parse_toml(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.companies {
        cfg.companies = n;
    }
    let d = generate(&cfg)?;
    let catalog = crate::graph::MetaPathSpec::catalog();
    let manifest = write_dataset(&a.out, &d.graph, Some(&d.labels), &catalog, &d.feature_sets)?;
    write_truth(&a.out.join("truth.csv"), cfg.seed, &d.truth)?;
    Ok(manifest)
}

fn model_config(p: &Option<PathBuf>) -> Result<ModelConfig> {
    let c: ModelConfig = match p {
        Some(p) => parse_toml(p)?,
        None => ModelConfig::default(),
    };
    c.validate()?;
    Ok(c)
}

fn train_config(p: &Option<PathBuf>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut c: TrainConfig = match p {
        Some(p) => parse_toml(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        c.seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn labeled(d: &Dataset) -> Result<&crate::train::LabeledSet> {
    d.labels
        .as_ref()
        .ok_or_else(|| HidamError::InvalidArgument("manifest lists no labels file".into()))
}

/// Trains on the manifest's labels and writes `model.ckpt`, `history.csv`
/// and, with a holdout, `holdout.csv`. Returns the checkpoint.
pub fn cmd_train(a: &TrainArgs) -> Result<Checkpoint> {
    let d = load_dataset(&a.manifest)?;
    let mc = model_config(&a.model_config)?;
    mc.select_paths(&d.catalog)?;
    let tc = train_config(&a.train_config, a.seed)?;
    let splits = make_splits(labeled(&d)?, tc.validation_fraction, a.holdout, tc.seed)?;
    for w in &splits.warnings {
        eprintln!("warning: {w}");
    }
    let fitted = fit_hidam(&d.graph, &d.catalog, mc, &splits, &tc)?;
    mkdir(&a.out)?;
    let v = &fitted.outcome.validation;
    let ck = Checkpoint {
        model: fitted.model,
        train_seed: tc.seed,
        metrics: Some(CheckpointMetrics {
            best_epoch: fitted.outcome.best_epoch,
            val_auc: v.auc,
            val_ks: v.ks,
        }),
    };
    save_checkpoint(&a.out.join("model.ckpt"), &ck)?;
    write_history(&a.out.join("history.csv"), tc.seed, &v.history)?;
    if let Some(t) = &splits.test {
        write_labels(&a.out.join("holdout.csv"), t)?;
    }
    let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    println!(
        "seed={} best_epoch={} val_auc={} val_ks={}",
        tc.seed,
        fitted.outcome.best_epoch,
        fmt(v.auc),
        fmt(v.ks)
    );
    if let Some(t) = &fitted.test {
        println!("test_auc={} test_ks={}", fmt(t.auc), fmt(t.ks));
    }
    Ok(ck)
}

fn read_ids(path: &Path) -> Result<Vec<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Known `(id, index)` pairs and unknown ids.
type Targets = (Vec<(String, u32)>, Vec<String>);

/// Resolves requested ids to company indices, collecting unknown ones.
fn targets(d: &Dataset, ids: &Option<PathBuf>) -> Result<Targets> {
    let g = &d.graph;
    let store = g.node_store(g.target_type()?);
    let Some(p) = ids else {
        let all = store.ids().iter().cloned().zip(0..).collect();
        return Ok((all, Vec::new()));
    };
    let (mut found, mut skipped) = (Vec::new(), Vec::new());
    for id in read_ids(p)? {
        match store.index_of(&id) {
            Some(i) => found.push((id, i)),
            None => skipped.push(id),
        }
    }
    Ok((found, skipped))
}

pub fn cmd_predict(a: &PredictArgs) -> Result<Outcome> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let d = load_dataset(&a.manifest)?;
    let (found, skipped) = targets(&d, &a.ids)?;
    let seed = a.seed.unwrap_or_else(|| eval_seed(ck.train_seed));
    let inputs = ck.model.encode_inputs(&d.graph)?;
    let idx: Vec<u32> = found.iter().map(|t| t.1).collect();
    let scores = ck.model.predict(&d.graph, &inputs, &idx, seed)?;
    let rows: Vec<Prediction> = found
        .into_iter()
        .zip(scores)
        .map(|((id, _), score)| Prediction { id, score })
        .collect();
    write_predictions(&a.out, seed, &rows)?;
    Ok(Outcome { skipped })
}

pub fn cmd_explain(a: &ExplainArgs) -> Result<Outcome> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let d = load_dataset(&a.manifest)?;
    let (found, skipped) = targets(&d, &a.ids)?;
    let seed = a.seed.unwrap_or_else(|| eval_seed(ck.train_seed));
    let inputs = ck.model.encode_inputs(&d.graph)?;
    let items = found
        .iter()
        .map(|&(_, u)| ck.model.explain(&d.graph, &inputs, u, a.k, seed))
        .collect::<Result<Vec<_>>>()?;
    write_explanations(&a.out, seed, &items)?;
    Ok(Outcome { skipped })
}

/// One training run per grid value; the reported metrics are on the
/// holdout when one is requested, on the validation set otherwise.
pub fn cmd_sweep(a: &SweepArgs) -> Result<Vec<SweepRow>> {
    if a.dims.is_empty() && a.semantic_dims.is_empty() {
        return Err(HidamError::InvalidArgument("empty grid: pass --dims and/or --semantic-dims".into()));
    }
    let d = load_dataset(&a.manifest)?;
    let base = model_config(&a.model_config)?;
    let tc = train_config(&a.train_config, a.seed)?;
    let splits = make_splits(labeled(&d)?, tc.validation_fraction, a.holdout, tc.seed)?;
    let grid = a
        .dims
        .iter()
        .map(|&v| ("dim", v))
        .chain(a.semantic_dims.iter().map(|&v| ("semantic_dim", v)));
    let mut rows = Vec::new();
    for (param, value) in grid {
        let mut mc = base.clone();
        if param == "dim" {
            mc.dim = value;
        } else {
            mc.semantic_dim = Some(value);
        }
        mc.validate()?;
        let f = fit_hidam(&d.graph, &d.catalog, mc, &splits, &tc)?;
        let m = f.test.as_ref().unwrap_or(&f.outcome.validation);
        rows.push(SweepRow {
            param: param.to_string(),
            value,
            auc: m.auc,
            ks: m.ks,
        });
    }
    write_sweep(&a.out, tc.seed, &rows)?;
    Ok(rows)
}
