use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tables::{read_labels, read_link_table, read_node_table, write_labels, write_link_table, write_node_table};
use crate::error::{HidamError, Result};
use crate::graph::{build_graph, Bcn, FeatureSet, MetaPathSpec, Schema};
use crate::train::LabeledSet;

/// A named group of company columns, referenced by column name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSetColumns {
    pub name: String,
    pub columns: Vec<String>,
}

/// Describes where a dataset's files live. Relative paths are resolved
/// against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: PathBuf,
    /// Meta-path catalog; the built-in catalog when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metapaths: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    pub nodes: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub links: BTreeMap<String, PathBuf>,
    #[serde(default, rename = "feature_set")]
    pub feature_sets: Vec<FeatureSetColumns>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MetaPathFile {
    metapath: Vec<MetaPathSpec>,
}

/// A dataset loaded through its manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Manifest,
    pub graph: Bcn,
    pub labels: Option<LabeledSet>,
    pub catalog: Vec<MetaPathSpec>,
    pub feature_sets: Vec<FeatureSet>,
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HidamError::io(path, e))
}

pub(crate) fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HidamError::io(path, e))
}

pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start].matches('\n').count() + 1)
            .unwrap_or(0);
        HidamError::Parse {
            path: path.to_path_buf(),
            line,
            reason: e.message().to_string(),
        }
    })
}

pub(crate) fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| HidamError::InvalidArgument(format!("cannot serialise: {e}")))
}

pub fn read_metapaths(path: &Path) -> Result<Vec<MetaPathSpec>> {
    Ok(parse_toml::<MetaPathFile>(path)?.metapath)
}

pub fn write_metapaths(path: &Path, specs: &[MetaPathSpec]) -> Result<()> {
    write_string(
        path,
        &to_toml(&MetaPathFile {
            metapath: specs.to_vec(),
        })?,
    )
}

/// Looks feature-set columns up among the company columns.
pub fn resolve_feature_sets(g: &Bcn, sets: &[FeatureSetColumns]) -> Result<Vec<FeatureSet>> {
    let companies = g.node_store(g.target_type()?);
    sets.iter()
        .map(|s| {
            let columns = s
                .columns
                .iter()
                .map(|c| {
                    companies.columns.iter().position(|k| k == c).ok_or_else(|| {
                        HidamError::Schema(format!(
                            "feature set `{}` names unknown company column `{c}`",
                            s.name
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            Ok(FeatureSet {
                name: s.name.clone(),
                columns,
            })
        })
        .collect()
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest: Manifest = parse_toml(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let at = |p: &Path| root.join(p);
    let schema: Schema = parse_toml(&at(&manifest.schema))?;
    schema.validate()?;
    let nodes = manifest
        .nodes
        .iter()
        .map(|(ty, p)| read_node_table(&at(p), ty))
        .collect::<Result<Vec<_>>>()?;
    let links = manifest
        .links
        .iter()
        .map(|(ty, p)| read_link_table(&at(p), ty))
        .collect::<Result<Vec<_>>>()?;
    let graph = build_graph(schema, &nodes, &links)?;
    let labels = manifest.labels.as_ref().map(|p| read_labels(&at(p))).transpose()?;
    let catalog = match &manifest.metapaths {
        Some(p) => read_metapaths(&at(p))?,
        None => MetaPathSpec::catalog(),
    };
    let feature_sets = resolve_feature_sets(&graph, &manifest.feature_sets)?;
    Ok(Dataset {
        manifest,
        graph,
        labels,
        catalog,
        feature_sets,
    })
}

/// Writes every table of `g` plus schema, catalog and labels into `dir`
/// and returns the manifest path.
pub fn write_dataset(
    dir: &Path,
    g: &Bcn,
    labels: Option<&LabeledSet>,
    catalog: &[MetaPathSpec],
    feature_sets: &[FeatureSet],
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| HidamError::io(dir, e))?;
    let (nodes, links) = g.to_tables();
    let mut manifest = Manifest {
        schema: "schema.toml".into(),
        metapaths: Some("metapaths.toml".into()),
        labels: labels.map(|_| "labels.csv".into()),
        nodes: BTreeMap::new(),
        links: BTreeMap::new(),
        feature_sets: Vec::new(),
    };
    write_string(&dir.join("schema.toml"), &to_toml(g.schema())?)?;
    write_metapaths(&dir.join("metapaths.toml"), catalog)?;
    for t in &nodes {
        let name = PathBuf::from(format!("nodes_{}.csv", t.type_name));
        write_node_table(&dir.join(&name), t)?;
        manifest.nodes.insert(t.type_name.clone(), name);
    }
    for t in &links {
        let name = PathBuf::from(format!("links_{}.csv", t.type_name));
        write_link_table(&dir.join(&name), t)?;
        manifest.links.insert(t.type_name.clone(), name);
    }
    if let Some(l) = labels {
        write_labels(&dir.join("labels.csv"), l)?;
    }
    let company_cols = &g.node_store(g.target_type()?).columns;
    manifest.feature_sets = feature_sets
        .iter()
        .map(|f| FeatureSetColumns {
            name: f.name.clone(),
            columns: f.columns.iter().map(|&c| company_cols[c].clone()).collect(),
        })
        .collect();
    let path = dir.join("manifest.toml");
    write_string(&path, &to_toml(&manifest)?)?;
    Ok(path)
}
