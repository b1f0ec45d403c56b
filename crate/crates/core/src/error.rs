use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HidamError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HidamError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown {kind} type `{name}`")]
    UnknownType { kind: &'static str, name: String },

    #[error("{kind} `{type_name}` row {row}: duplicate id `{id}`")]
    DuplicateId {
        kind: &'static str,
        type_name: String,
        row: usize,
        id: String,
    },

    #[error("link `{link_type}` row {row}: endpoint `{id}` does not exist in node type `{node_type}`")]
    DanglingEndpoint {
        link_type: String,
        row: usize,
        id: String,
        node_type: String,
    },

    #[error("{kind} `{type_name}` row {row}: expected {expected} attributes, found {found}")]
    ArityMismatch {
        kind: &'static str,
        type_name: String,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("meta-path `{name}`: {reason}")]
    MetaPath { name: String, reason: String },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HidamError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        HidamError::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HidamError::Io {
            path: path.into(),
            source,
        }
    }
}
