use serde::{Deserialize, Serialize};

use crate::error::{HidamError, Result};
use crate::graph::MetaPathSpec;
use crate::numerics::Activation;

/// How masked attribute values enter the feature projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    /// Standardise each column (statistics from training companies for the
    /// target type, all entities otherwise), then put missing values at 0,
    /// i.e. at the column mean.
    StandardizedZero,
    /// Raw values, missing as 0.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Embedding width shared by every projected node and link.
    pub dim: usize,
    /// Names of the meta-paths to aggregate, looked up in the catalog.
    pub metapaths: Vec<String>,
    /// Instances sampled per (node, meta-path).
    pub neighbor_cap: usize,
    /// Negative slope of the LeakyReLU inside instance scores.
    pub attention_slope: f64,
    /// Width of the optional projection before the semantic attention
    /// vector. `None` applies the attention vector to the embedding directly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semantic_dim: Option<usize>,
    pub hidden_dim: usize,
    pub imputation: Imputation,
    /// Activation around the residual sum of instance fusion.
    pub residual_activation: Activation,
    /// Activation applied to meta-path embeddings before semantic scoring.
    pub semantic_activation: Activation,
    /// When false, instances are averaged with uniform weights.
    pub instance_attention: bool,
    /// When false, meta-paths are averaged with uniform weights.
    pub semantic_attention: bool,
    /// When false, every link type is represented by a learned type vector.
    pub link_attributes: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 64,
            metapaths: MetaPathSpec::catalog().into_iter().map(|s| s.name).collect(),
            neighbor_cap: 20,
            attention_slope: 0.2,
            semantic_dim: None,
            hidden_dim: 64,
            imputation: Imputation::StandardizedZero,
            residual_activation: Activation::Elu,
            semantic_activation: Activation::Tanh,
            instance_attention: true,
            semantic_attention: true,
            link_attributes: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HidamError::InvalidArgument(m.into()));
        if self.dim == 0 {
            return bad("model dim must be at least 1");
        }
        if self.hidden_dim == 0 {
            return bad("hidden dim must be at least 1");
        }
        if self.neighbor_cap == 0 {
            return bad("neighbor cap must be at least 1");
        }
        if self.semantic_dim == Some(0) {
            return bad("semantic dim must be at least 1 when set");
        }
        if self.metapaths.is_empty() {
            return bad("at least one meta-path is required");
        }
        Ok(())
    }

    /// Picks the configured specs out of a catalog, in configured order.
    pub fn select_paths(&self, catalog: &[MetaPathSpec]) -> Result<Vec<MetaPathSpec>> {
        self.metapaths
            .iter()
            .map(|name| {
                catalog
                    .iter()
                    .find(|s| &s.name == name)
                    .cloned()
                    .ok_or_else(|| {
                        HidamError::Schema(format!("meta-path `{name}` is not in the catalog"))
                    })
            })
            .collect()
    }
}
