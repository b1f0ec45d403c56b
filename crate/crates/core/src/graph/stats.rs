//! Coverage and missing-rate statistics over the company population.

use std::collections::BTreeSet;

use super::metapath::{metapath_neighbors, MetaPath};
use super::store::{Bcn, LinkStore, NodeRef};
use crate::error::{HidamError, Result};

/// Fraction of companies incident to at least one link of `link_type`.
/// For a link type between two non-company types, a company counts when it
/// is directly linked to a node incident to such a link.
pub fn coverage_stats(g: &Bcn, link_type: &str) -> Result<f64> {
    let lt = g.schema().link_type_index(link_type)?;
    let ty = g.target_type()?;
    let n = g.node_store(ty).len();
    if n == 0 {
        return Err(HidamError::Undefined("coverage over zero companies".into()));
    }
    let store = g.link_store(lt);
    let mut touched = vec![false; n];
    if store.source_type == ty || store.target_type == ty {
        mark(&mut touched, store, ty, |_, _| true);
    } else {
        let mut involved: Vec<Vec<bool>> = g.node_stores().iter().map(|s| vec![false; s.len()]).collect();
        for (&s, &t) in store.sources().iter().zip(store.targets()) {
            involved[store.source_type][s as usize] = true;
            involved[store.target_type][t as usize] = true;
        }
        for other in g.link_stores() {
            mark(&mut touched, other, ty, |other_ty, v| involved[other_ty][v as usize]);
        }
    }
    Ok(touched.iter().filter(|&&t| t).count() as f64 / n as f64)
}

/// Marks companies on links of `store` whose other endpoint passes `keep`.
fn mark(touched: &mut [bool], store: &LinkStore, ty: usize, keep: impl Fn(usize, u32) -> bool) {
    for (&s, &t) in store.sources().iter().zip(store.targets()) {
        if store.source_type == ty && keep(store.target_type, t) {
            touched[s as usize] = true;
        }
        if store.target_type == ty && keep(store.source_type, s) {
            touched[t as usize] = true;
        }
    }
}

/// A named group of company attribute columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    pub name: String,
    pub columns: Vec<usize>,
}

/// A named set of meta-paths whose neighbors may fill missing values.
#[derive(Debug, Clone)]
pub struct NeighborGroup {
    pub name: String,
    pub paths: Vec<MetaPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingRateRow {
    pub feature_set: String,
    /// Mean per-company fraction of masked values.
    pub own: f64,
    /// Same, after neighbor fill, one entry per group.
    pub filled: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingRateTable {
    pub groups: Vec<String>,
    pub rows: Vec<MissingRateRow>,
}

/// Average missing rate per feature set, on the company alone and with an
/// attribute counted present if any (uncapped) meta-path neighbor in the
/// group has it.
pub fn missing_rate_stats(
    g: &Bcn,
    feature_sets: &[FeatureSet],
    groups: &[NeighborGroup],
) -> Result<MissingRateTable> {
    let ty = g.target_type()?;
    let store = g.node_store(ty);
    let attrs = store.attrs();
    for fs in feature_sets {
        if fs.columns.is_empty() {
            return Err(HidamError::InvalidArgument(format!(
                "feature set `{}` is empty",
                fs.name
            )));
        }
        if let Some(&c) = fs.columns.iter().find(|&&c| c >= attrs.cols()) {
            return Err(HidamError::InvalidArgument(format!(
                "feature set `{}` references column {c} of {}",
                fs.name,
                attrs.cols()
            )));
        }
    }
    let n = store.len();
    if n == 0 {
        return Err(HidamError::Undefined("missing rate over zero companies".into()));
    }

    let mut own = vec![0.0; feature_sets.len()];
    let mut filled = vec![vec![0.0; groups.len()]; feature_sets.len()];
    for u in 0..n as u32 {
        let mask = attrs.missing_row(u as usize);
        for (k, fs) in feature_sets.iter().enumerate() {
            let m = fs.columns.iter().filter(|&&c| mask[c]).count();
            own[k] += m as f64 / fs.columns.len() as f64;
        }
        for (j, group) in groups.iter().enumerate() {
            let mut neighbors = BTreeSet::new();
            for mp in &group.paths {
                neighbors.extend(metapath_neighbors(g, NodeRef { ty, idx: u }, mp)?);
            }
            for (k, fs) in feature_sets.iter().enumerate() {
                let m = fs
                    .columns
                    .iter()
                    .filter(|&&c| {
                        mask[c]
                            && neighbors
                                .iter()
                                .all(|&v| attrs.missing_row(v as usize)[c])
                    })
                    .count();
                filled[k][j] += m as f64 / fs.columns.len() as f64;
            }
        }
    }
    Ok(MissingRateTable {
        groups: groups.iter().map(|g| g.name.clone()).collect(),
        rows: feature_sets
            .iter()
            .enumerate()
            .map(|(k, fs)| MissingRateRow {
                feature_set: fs.name.clone(),
                own: own[k] / n as f64,
                filled: filled[k].iter().map(|v| v / n as f64).collect(),
            })
            .collect(),
    })
}

/// Groups meta-paths by view tag, in first-seen order, plus an "all" group.
pub fn view_groups(paths: &[MetaPath]) -> Vec<NeighborGroup> {
    let mut groups: Vec<NeighborGroup> = Vec::new();
    for mp in paths {
        match groups.iter_mut().find(|g| g.name == mp.view()) {
            Some(g) => g.paths.push(mp.clone()),
            None => groups.push(NeighborGroup {
                name: mp.view().to_string(),
                paths: vec![mp.clone()],
            }),
        }
    }
    groups.push(NeighborGroup {
        name: "all".into(),
        paths: paths.to_vec(),
    });
    groups
}
