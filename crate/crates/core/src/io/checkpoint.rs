//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//! `"HIDM"` | version `u32` | config length `u32` + UTF-8 TOML |
//! tensor count `u32` | per tensor: name length `u32` + name, rank `u32`,
//! dims `u64` each, row-major `f64` payload.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::to_toml;
use crate::error::{HidamError, Result};
use crate::graph::{MetaPathSpec, Schema};
use crate::model::{Hidam, ModelConfig, Scaler};
use crate::numerics::{Matrix, ParamStore};

pub const MAGIC: &[u8; 4] = b"HIDM";
pub const VERSION: u32 = 1;

/// Validation summary stored with a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CheckpointMetrics {
    pub best_epoch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_ks: Option<f64>,
}

// Seeds are stored as strings: TOML integers are signed 64-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    init_seed: String,
    train_seed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics: Option<CheckpointMetrics>,
    model: ModelConfig,
    schema: Schema,
    metapath: Vec<MetaPathSpec>,
}

/// A trained model with the seed needed to reproduce its predictions.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Hidam,
    pub train_seed: u64,
    pub metrics: Option<CheckpointMetrics>,
}

fn scaler_tensors(prefix: &str, names: impl Iterator<Item = String>, scalers: &[Scaler]) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    names
        .zip(scalers)
        .flat_map(|(n, s)| {
            [
                (format!("{prefix}.{n}.mean"), vec![s.mean.len()], s.mean.clone()),
                (format!("{prefix}.{n}.scale"), vec![s.scale.len()], s.scale.clone()),
            ]
        })
        .collect()
}

fn tensors(model: &Hidam) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let mut out: Vec<_> = model
        .params()
        .into_iter()
        .map(|p| {
            let (r, c) = p.value.shape();
            (p.name.clone(), vec![r, c], p.value.data().to_vec())
        })
        .collect();
    let (ns, ls) = model.scalers();
    let schema = model.schema();
    out.extend(scaler_tensors(
        "scaler.node",
        schema.node_types.iter().map(|t| t.name.clone()),
        ns,
    ));
    out.extend(scaler_tensors(
        "scaler.link",
        schema.link_types.iter().map(|t| t.name.clone()),
        ls,
    ));
    out
}

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| HidamError::Checkpoint(format!("{v} exceeds u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    let header = Header {
        init_seed: ck.model.init_seed().to_string(),
        train_seed: ck.train_seed.to_string(),
        metrics: ck.metrics.clone(),
        model: ck.model.config().clone(),
        schema: ck.model.schema().clone(),
        metapath: ck.model.specs(),
    };
    let text = to_toml(&header)?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut buf, text.len())?;
    buf.extend_from_slice(text.as_bytes());
    let ts = tensors(&ck.model);
    put_u32(&mut buf, ts.len())?;
    for (name, dims, data) in ts {
        put_u32(&mut buf, name.len())?;
        buf.extend_from_slice(name.as_bytes());
        put_u32(&mut buf, dims.len())?;
        for d in dims {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            HidamError::Checkpoint(format!("truncated at byte {}", self.at))
        })?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| HidamError::Checkpoint(format!("dimension {v} too large")))
    }

    fn str(&mut self, n: usize) -> Result<&'a str> {
        std::str::from_utf8(self.take(n)?).map_err(|e| HidamError::Checkpoint(format!("invalid UTF-8: {e}")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut c = Cursor { buf: bytes, at: 0 };
    if c.take(4)? != MAGIC {
        return Err(HidamError::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = c.u32()? as u32;
    if version != VERSION {
        return Err(HidamError::Checkpoint(format!(
            "format version {version} is not supported (expected {VERSION})"
        )));
    }
    let len = c.u32()?;
    let header: Header = toml::from_str(c.str(len)?)
        .map_err(|e| HidamError::Checkpoint(format!("config block: {e}")))?;
    let seed = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| HidamError::Checkpoint(format!("seed `{s}` is not an integer")))
    };
    let mut model = Hidam::new(
        &header.schema,
        header.model,
        &header.metapath,
        seed(&header.init_seed)?,
    )?;
    let expected = tensors(&model);
    let count = c.u32()?;
    if count != expected.len() {
        return Err(HidamError::Checkpoint(format!(
            "{count} tensors stored, model has {}",
            expected.len()
        )));
    }
    let (mut node_sc, mut link_sc) = {
        let (n, l) = model.scalers();
        (n.to_vec(), l.to_vec())
    };
    for (name, dims, _) in expected {
        let n = c.u32()?;
        let stored = c.str(n)?;
        if stored != name {
            return Err(HidamError::Checkpoint(format!("expected tensor `{name}`, found `{stored}`")));
        }
        let rank = c.u32()?;
        let got: Vec<usize> = (0..rank).map(|_| c.u64()).collect::<Result<_>>()?;
        if got != dims {
            return Err(HidamError::Checkpoint(format!("tensor `{name}` has shape {got:?}, expected {dims:?}")));
        }
        let len: usize = dims.iter().product();
        let raw = c.take(len * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        assign(&mut model, &mut node_sc, &mut link_sc, &name, &dims, data)?;
    }
    if c.at != bytes.len() {
        return Err(HidamError::Checkpoint(format!("{} trailing bytes", bytes.len() - c.at)));
    }
    model.set_scalers(node_sc, link_sc)?;
    Ok(Checkpoint {
        model,
        train_seed: seed(&header.train_seed)?,
        metrics: header.metrics,
    })
}

fn assign(
    model: &mut Hidam,
    node_sc: &mut [Scaler],
    link_sc: &mut [Scaler],
    name: &str,
    dims: &[usize],
    data: Vec<f64>,
) -> Result<()> {
    let scaler_slot = |rest: &str, types: Vec<String>, sc: &mut [Scaler]| -> Option<(usize, bool)> {
        let (ty, field) = rest.rsplit_once('.')?;
        let i = types.iter().position(|t| t == ty)?;
        let _ = &sc[i];
        Some((i, field == "mean"))
    };
    if let Some(rest) = name.strip_prefix("scaler.node.") {
        let types = model.schema().node_types.iter().map(|t| t.name.clone()).collect();
        let (i, mean) = scaler_slot(rest, types, node_sc).expect("name produced by tensors()");
        if mean { node_sc[i].mean = data } else { node_sc[i].scale = data }
    } else if let Some(rest) = name.strip_prefix("scaler.link.") {
        let types = model.schema().link_types.iter().map(|t| t.name.clone()).collect();
        let (i, mean) = scaler_slot(rest, types, link_sc).expect("name produced by tensors()");
        if mean { link_sc[i].mean = data } else { link_sc[i].scale = data }
    } else {
        let p = model.param_mut(name).expect("name produced by tensors()");
        p.value = Matrix::from_vec(dims[0], dims[1], data)?;
    }
    Ok(())
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode_checkpoint(ck)?).map_err(|e| HidamError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| HidamError::io(path, e))?;
    decode_checkpoint(&bytes)
}
