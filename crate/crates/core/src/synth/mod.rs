//! Synthetic banking networks with planted default contagion.

pub mod config;
pub mod generate;
pub mod lift;

pub use config::{FeatureSetSpec, SynthConfig, ViewStrengths};
pub use generate::{company_id, generate, synth_schema, SynthDataset, TruthRow};
pub use lift::{measure_lift, view_neighbors, ViewLift};
