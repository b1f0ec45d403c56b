//! File formats: CSV tables, TOML manifests, binary checkpoints and
//! delimited-text reports.

pub mod checkpoint;
pub mod manifest;
pub mod reports;
pub mod tables;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMetrics,
};
pub use manifest::{
    load_dataset, read_metapaths, resolve_feature_sets, write_dataset, write_metapaths, Dataset, FeatureSetColumns,
    Manifest,
};
pub use reports::*;
pub use tables::{read_labels, read_link_table, read_node_table, write_labels, write_link_table, write_node_table};
