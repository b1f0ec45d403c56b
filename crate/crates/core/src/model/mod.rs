//! The HIDAM model, an attribute-only baseline, and the loss they share.

pub mod baseline;
pub mod config;
pub mod features;
pub mod hidam;
pub mod layers;
pub mod loss;

pub use baseline::AttributeMlp;
pub use config::{Imputation, ModelConfig};
pub use features::{fit_scalers, GraphInputs, Scaler};
pub use hidam::{Encoder, Explanation, ForwardTrace, Hidam, NodeTrace, PathTrace};
pub use layers::{
    head_backward, head_forward, instance_fusion, instance_fusion_backward, semantic_fusion,
    semantic_fusion_backward, HeadRecord, HeadWeights, InstanceGrads, InstanceRecord,
    InstanceWeights, SemanticRecord, SemanticWeights,
};
pub use loss::{bce_logit_grad, bce_loss};

use crate::error::Result;
use crate::graph::Bcn;
use crate::numerics::ParamStore;

/// A trainable company scorer. Targets are company indices in `g`.
pub trait Scorer: ParamStore {
    /// Fits input standardisation; company statistics come from
    /// `train_targets` only.
    fn fit_scalers(&mut self, g: &Bcn, train_targets: &[u32]) -> Result<()>;

    fn encode_inputs(&self, g: &Bcn) -> Result<GraphInputs>;

    /// Summed loss over the batch; accumulates parameter gradients.
    fn loss_and_grad(
        &mut self,
        g: &Bcn,
        inputs: &GraphInputs,
        targets: &[u32],
        labels: &[f64],
        seed: u64,
        pos_weight: f64,
    ) -> Result<f64>;

    fn predict(&self, g: &Bcn, inputs: &GraphInputs, targets: &[u32], seed: u64) -> Result<Vec<f64>>;
}
