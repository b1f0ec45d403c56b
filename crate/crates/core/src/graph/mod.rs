//! Attributed heterogeneous graph storage and meta-path machinery.

pub mod metapath;
pub mod schema;
pub mod stats;
pub mod store;

pub use metapath::{
    count_instances, enumerate_path_instances, metapath_neighbors, resolve_all, walk_instances,
    Direction, Element, ElementKind, MetaPath, MetaPathSpec, PathInstance, ResolvedStep, StepSpec,
};
pub use schema::{BankingWidths, LinkTypeDef, NodeTypeDef, Schema, TARGET_NODE_TYPE};
pub use stats::{
    coverage_stats, missing_rate_stats, view_groups, FeatureSet, MissingRateRow, MissingRateTable,
    NeighborGroup,
};
pub use store::{
    build_graph, AttrMatrix, Bcn, LinkRow, LinkStore, LinkTable, NodeRef, NodeRow, NodeStore,
    NodeTable,
};
