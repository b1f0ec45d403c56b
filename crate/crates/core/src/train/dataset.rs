use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::error::{HidamError, Result};
use crate::graph::Bcn;
use crate::numerics::rng_from;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCompany {
    pub id: String,
    pub label: u8,
    pub timestamp: Option<i64>,
}

/// Labeled target companies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub entries: Vec<LabeledCompany>,
}

/// A labeled set resolved to company indices of one graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Resolved {
    pub targets: Vec<u32>,
    pub labels: Vec<f64>,
}

impl Resolved {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: LabeledSet,
    pub validation: LabeledSet,
    /// Non-fatal problems, such as a side without positives.
    pub warnings: Vec<String>,
}

impl LabeledSet {
    pub fn new(entries: Vec<LabeledCompany>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.label > 1 {
                return Err(HidamError::InvalidArgument(format!(
                    "label {} for `{}` is not 0 or 1",
                    e.label, e.id
                )));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(HidamError::InvalidArgument(format!("`{}` labeled twice", e.id)));
            }
        }
        Ok(LabeledSet { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().filter(|e| e.label == 1).count() as f64 / self.entries.len() as f64
    }

    /// Maps ids to company indices; every id must exist.
    pub fn resolve(&self, g: &Bcn) -> Result<Resolved> {
        let mut out = Resolved::default();
        for e in &self.entries {
            let node = g.company(&e.id).ok_or_else(|| {
                HidamError::InvalidArgument(format!("labeled company `{}` is not in the graph", e.id))
            })?;
            out.targets.push(node.idx);
            out.labels.push(e.label as f64);
        }
        Ok(out)
    }

    fn subset(&self, idx: &[usize]) -> LabeledSet {
        LabeledSet {
            entries: idx.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }

    /// Holds out `fraction` of the entries. With timestamps on every entry
    /// the latest ones are held out; otherwise the split is stratified by
    /// label and seeded.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<Split> {
        if self.entries.is_empty() {
            return Err(HidamError::InvalidArgument("cannot split an empty labeled set".into()));
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(HidamError::InvalidArgument(format!(
                "validation fraction {fraction} must lie in (0, 1)"
            )));
        }
        let n = self.entries.len();
        let (train_idx, val_idx) = if self.entries.iter().all(|e| e.timestamp.is_some()) {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by_key(|&i| self.entries[i].timestamp);
            let n_val = (fraction * n as f64).round() as usize;
            let val = idx.split_off(n - n_val);
            (idx, val)
        } else {
            let mut rng = rng_from(seed);
            let (mut train, mut val) = (Vec::new(), Vec::new());
            for class in [0u8, 1] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| self.entries[i].label == class).collect();
                idx.shuffle(&mut rng);
                let n_val = (fraction * idx.len() as f64).round() as usize;
                val.extend_from_slice(&idx[..n_val]);
                train.extend_from_slice(&idx[n_val..]);
            }
            train.sort_unstable();
            val.sort_unstable();
            (train, val)
        };
        let split = Split {
            train: self.subset(&train_idx),
            validation: self.subset(&val_idx),
            warnings: Vec::new(),
        };
        Ok(split.with_warnings())
    }
}

impl Split {
    fn with_warnings(mut self) -> Self {
        for (name, side) in [("training", &self.train), ("validation", &self.validation)] {
            if !side.entries.iter().any(|e| e.label == 1) {
                self.warnings.push(format!("{name} side has no positive labels"));
            }
        }
        self
    }
}
