use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Resolved;
use super::metrics::{auc, ks};
use crate::error::{HidamError, Result};
use crate::graph::Bcn;
use crate::model::{bce_loss, GraphInputs, Scorer};
use crate::numerics::{adam_step, mix, rng_from, AdamState, Matrix};

/// Stream id for the instance sampling used during evaluation.
const EVAL_STREAM: u64 = 0x0E7A_1000;

/// Seed for evaluation-time instance sampling derived from a master seed.
/// Prediction commands reuse it so scores match those seen in training.
pub fn eval_seed(seed: u64) -> u64 {
    mix(seed, EVAL_STREAM)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Multiplier on the loss of positive samples; 1 disables reweighting.
    pub pos_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            learning_rate: 0.001,
            weight_decay: 0.01,
            patience: 50,
            max_epochs: 200,
            seed: 0,
            validation_fraction: 0.2,
            pos_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HidamError::InvalidArgument(m));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max epochs must be at least 1".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!(
                "validation fraction {} must lie in (0, 1)",
                self.validation_fraction
            ));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.learning_rate) || self.weight_decay < 0.0 || !positive(self.pos_weight) {
            return bad("learning rate and positive weight must be positive, decay non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss per sample.
    pub loss: f64,
    pub val_auc: Option<f64>,
    pub val_ks: Option<f64>,
    /// Wall-clock seconds for the training pass of this epoch.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub auc: Option<f64>,
    pub ks: Option<f64>,
    pub positive_rate: f64,
    pub samples: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    /// Validation metrics of the kept parameters, with the full history.
    pub validation: MetricsReport,
}

/// AUC and KS of `model` on `set`, or `None` where undefined.
pub fn evaluate<S: Scorer>(
    model: &S,
    g: &Bcn,
    inputs: &GraphInputs,
    set: &Resolved,
    seed: u64,
) -> Result<MetricsReport> {
    let scores = model.predict(g, inputs, &set.targets, seed)?;
    Ok(report(&scores, &set.labels, Vec::new()))
}

fn report(scores: &[f64], labels: &[f64], history: Vec<EpochRecord>) -> MetricsReport {
    let n = labels.len();
    MetricsReport {
        auc: auc(scores, labels).ok(),
        ks: ks(scores, labels).ok(),
        positive_rate: if n == 0 {
            0.0
        } else {
            labels.iter().sum::<f64>() / n as f64
        },
        samples: n,
        history,
    }
}

fn snapshot<S: Scorer>(model: &S) -> Vec<Matrix> {
    model.params().iter().map(|p| p.value.clone()).collect()
}

/// Mini-batch Adam with early stopping on validation AUC (validation loss
/// when AUC is undefined). The best parameters are restored on return.
pub fn train<S: Scorer>(
    model: &mut S,
    g: &Bcn,
    train_set: &Resolved,
    val_set: &Resolved,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(HidamError::InvalidArgument("training set is empty".into()));
    }
    model.fit_scalers(g, &train_set.targets)?;
    let inputs = model.encode_inputs(g)?;
    let mut adam = AdamState::default();
    let eval = eval_seed(cfg.seed);

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Vec<Matrix>, Vec<f64>)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        let epoch_seed = mix(cfg.seed, epoch as u64);
        let started = Instant::now();
        order.sort_unstable();
        order.shuffle(&mut rng_from(epoch_seed));
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let targets: Vec<u32> = chunk.iter().map(|&i| train_set.targets[i]).collect();
            let labels: Vec<f64> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            model.zero_grad();
            let loss = model.loss_and_grad(g, &inputs, &targets, &labels, epoch_seed, cfg.pos_weight)?;
            if !loss.is_finite() {
                return Err(HidamError::NonFinite(format!(
                    "training loss {loss} at epoch {epoch}"
                )));
            }
            if let Some(p) = model.params().iter().find(|p| !p.grad.is_finite()) {
                return Err(HidamError::NonFinite(format!(
                    "gradient of `{}` at epoch {epoch}",
                    p.name
                )));
            }
            total += loss;
            adam_step(&mut model.params_mut(), &mut adam, cfg.learning_rate, cfg.weight_decay)?;
        }
        let seconds = started.elapsed().as_secs_f64();

        let scores = if val_set.is_empty() {
            Vec::new()
        } else {
            model.predict(g, &inputs, &val_set.targets, eval)?
        };
        let m = report(&scores, &val_set.labels, Vec::new());
        history.push(EpochRecord {
            epoch,
            loss: total / train_set.len() as f64,
            val_auc: m.auc,
            val_ks: m.ks,
            seconds,
        });
        let criterion = match m.auc {
            Some(a) => a,
            None if !val_set.is_empty() => -bce_loss(&scores, &val_set.labels, 1.0)?,
            None => -total,
        };
        if best.as_ref().is_none_or(|b| criterion > b.0) {
            best = Some((criterion, epoch, snapshot(model), scores));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let (_, best_epoch, values, scores) = best.expect("at least one epoch ran");
    for (p, v) in model.params_mut().into_iter().zip(values) {
        p.value = v;
    }
    Ok(TrainOutcome {
        best_epoch,
        validation: report(&scores, &val_set.labels, history),
    })
}
