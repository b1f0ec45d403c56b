//! Labeled data, splitting, evaluation metrics and the training loop.

pub mod dataset;
pub mod metrics;
pub mod trainer;

pub use dataset::{LabeledCompany, LabeledSet, Resolved, Split};
pub use metrics::{auc, ks};
pub use trainer::{eval_seed, evaluate, train, EpochRecord, MetricsReport, TrainConfig, TrainOutcome};
