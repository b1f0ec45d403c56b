//! End-to-end helpers shared by the command line, the bindings and the
//! experiment suites: split a labeled set, train, evaluate a holdout.

use crate::error::Result;
use crate::graph::{Bcn, MetaPathSpec};
use crate::model::{AttributeMlp, Hidam, ModelConfig, Scorer};
use crate::numerics::mix;
use crate::train::{eval_seed, evaluate, train, LabeledSet, MetricsReport, TrainConfig, TrainOutcome};

const INIT_STREAM: u64 = 1;
const HOLDOUT_STREAM: u64 = 2;
const VALIDATION_STREAM: u64 = 3;

/// Seed for parameter initialisation derived from a run seed.
pub fn init_seed(seed: u64) -> u64 {
    mix(seed, INIT_STREAM)
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: LabeledSet,
    pub validation: LabeledSet,
    pub test: Option<LabeledSet>,
    pub warnings: Vec<String>,
}

/// Optionally holds out a test fraction, then carves the validation set out
/// of the remainder.
pub fn make_splits(
    labels: &LabeledSet,
    validation_fraction: f64,
    holdout: Option<f64>,
    seed: u64,
) -> Result<Splits> {
    let mut warnings = Vec::new();
    let (rest, test) = match holdout {
        Some(f) => {
            let s = labels.split(f, mix(seed, HOLDOUT_STREAM))?;
            warnings.extend(s.warnings);
            (s.train, Some(s.validation))
        }
        None => (labels.clone(), None),
    };
    let s = rest.split(validation_fraction, mix(seed, VALIDATION_STREAM))?;
    warnings.extend(s.warnings);
    Ok(Splits {
        train: s.train,
        validation: s.validation,
        test,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct Fitted<S> {
    pub model: S,
    pub outcome: TrainOutcome,
    pub test: Option<MetricsReport>,
}

/// Trains `model` on the splits and scores the test set, if any, with the
/// evaluation seed of the run.
pub fn fit<S: Scorer>(mut model: S, g: &Bcn, splits: &Splits, cfg: &TrainConfig) -> Result<Fitted<S>> {
    let tr = splits.train.resolve(g)?;
    let va = splits.validation.resolve(g)?;
    let outcome = train(&mut model, g, &tr, &va, cfg)?;
    let test = match &splits.test {
        Some(t) => {
            let inputs = model.encode_inputs(g)?;
            Some(evaluate(&model, g, &inputs, &t.resolve(g)?, eval_seed(cfg.seed))?)
        }
        None => None,
    };
    Ok(Fitted { model, outcome, test })
}

pub fn fit_hidam(
    g: &Bcn,
    catalog: &[MetaPathSpec],
    config: ModelConfig,
    splits: &Splits,
    cfg: &TrainConfig,
) -> Result<Fitted<Hidam>> {
    let model = Hidam::new(g.schema(), config, catalog, init_seed(cfg.seed))?;
    fit(model, g, splits, cfg)
}

/// Attribute-only baseline with the same hidden width and imputation.
pub fn fit_mlp(g: &Bcn, config: &ModelConfig, splits: &Splits, cfg: &TrainConfig) -> Result<Fitted<AttributeMlp>> {
    let model = AttributeMlp::new(g.schema(), config.hidden_dim, config.imputation, init_seed(cfg.seed))?;
    fit(model, g, splits, cfg)
}
