//! Python bindings: synthetic data, datasets, training, scoring,
//! explanations, checkpoints and the AUC / KS metrics.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hidam::graph::{coverage_stats, resolve_all, view_groups, MetaPathSpec};
use hidam::io::{self, Checkpoint, CheckpointMetrics};
use hidam::model::{ModelConfig, Scorer};
use hidam::pipeline::{fit_hidam, make_splits};
use hidam::synth::{generate, measure_lift, SynthConfig};
use hidam::train::{eval_seed, TrainConfig};
use hidam::HidamError;

fn err(e: HidamError) -> PyErr {
    match e {
        HidamError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn toml_or_default<T: serde::de::DeserializeOwned + Default>(text: Option<&str>) -> PyResult<T> {
    match text {
        Some(t) => toml::from_str(t).map_err(|e| PyValueError::new_err(format!("config: {e}"))),
        None => Ok(T::default()),
    }
}

/// Generates a synthetic dataset into `out_dir` and returns its manifest
/// path. `config` is a TOML string; absent keys take their defaults.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=0, companies=None, config=None))]
fn synth(py: Python<'_>, out_dir: PathBuf, seed: u64, companies: Option<usize>, config: Option<&str>) -> PyResult<String> {
    let mut cfg: SynthConfig = toml_or_default(config)?;
    cfg.seed = seed;
    if let Some(n) = companies {
        cfg.companies = n;
    }
    let manifest = py
        .detach(|| {
            let d = generate(&cfg)?;
            let catalog = MetaPathSpec::catalog();
            let manifest = io::write_dataset(&out_dir, &d.graph, Some(&d.labels), &catalog, &d.feature_sets)?;
            io::write_truth(&out_dir.join("truth.csv"), seed, &d.truth)?;
            Ok(manifest)
        })
        .map_err(err)?;
    Ok(manifest.display().to_string())
}

/// A dataset loaded from a manifest.
#[pyclass(module = "pyhidam", frozen)]
struct Dataset {
    inner: io::Dataset,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    fn load(manifest: PathBuf) -> PyResult<Self> {
        Ok(Dataset {
            inner: io::load_dataset(&manifest).map_err(err)?,
        })
    }

    #[getter]
    fn company_count(&self) -> usize {
        self.inner.graph.company_count()
    }

    fn company_ids(&self) -> Vec<String> {
        let g = &self.inner.graph;
        g.target_type()
            .map(|t| g.node_store(t).ids().to_vec())
            .unwrap_or_default()
    }

    /// `(id, label)` pairs, empty when the manifest has no labels.
    fn labels(&self) -> Vec<(String, u8)> {
        self.inner
            .labels
            .iter()
            .flat_map(|l| l.entries.iter().map(|e| (e.id.clone(), e.label)))
            .collect()
    }

    fn coverage(&self, link_type: &str) -> PyResult<f64> {
        coverage_stats(&self.inner.graph, link_type).map_err(err)
    }

    /// Default lift per view as dictionaries.
    fn lift<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let d = &self.inner;
        let labels = d
            .labels
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("dataset has no labels"))?;
        let groups = view_groups(&resolve_all(&d.catalog, d.graph.schema()).map_err(err)?);
        measure_lift(&d.graph, labels, &groups)
            .map_err(err)?
            .into_iter()
            .map(|l| {
                let x = PyDict::new(py);
                x.set_item("view", l.view)?;
                x.set_item("lift_percent", l.lift_percent)?;
                x.set_item("default_share", l.default_share)?;
                x.set_item("with_default_neighbor", l.with_default_neighbor)?;
                x.set_item("without_default_neighbor", l.without_default_neighbor)?;
                Ok(x)
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.company_count()
    }
}

/// A trained HIDAM model.
#[pyclass(module = "pyhidam", frozen)]
struct Model {
    ck: Checkpoint,
    test_auc: Option<f64>,
    test_ks: Option<f64>,
}

impl Model {
    fn targets(&self, d: &io::Dataset, ids: Option<Vec<String>>) -> PyResult<(Vec<String>, Vec<u32>)> {
        let g = &d.graph;
        let store = g.node_store(g.target_type().map_err(err)?);
        let ids = ids.unwrap_or_else(|| store.ids().to_vec());
        let idx = ids
            .iter()
            .map(|id| {
                store
                    .index_of(id)
                    .ok_or_else(|| PyKeyError::new_err(format!("unknown company id `{id}`")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok((ids, idx))
    }
}

#[pymethods]
impl Model {
    /// Trains on the dataset's labels. Configurations are TOML strings;
    /// absent keys take their defaults.
    #[staticmethod]
    #[pyo3(signature = (dataset, seed=0, holdout=None, model_config=None, train_config=None))]
    fn train(
        py: Python<'_>,
        dataset: &Dataset,
        seed: u64,
        holdout: Option<f64>,
        model_config: Option<&str>,
        train_config: Option<&str>,
    ) -> PyResult<Self> {
        let mc: ModelConfig = toml_or_default(model_config)?;
        let mut tc: TrainConfig = toml_or_default(train_config)?;
        tc.seed = seed;
        let d = &dataset.inner;
        let labels = d
            .labels
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("dataset has no labels"))?;
        let fitted = py
            .detach(|| {
                mc.validate()?;
                let splits = make_splits(labels, tc.validation_fraction, holdout, seed)?;
                fit_hidam(&d.graph, &d.catalog, mc, &splits, &tc)
            })
            .map_err(err)?;
        let v = &fitted.outcome.validation;
        Ok(Model {
            test_auc: fitted.test.as_ref().and_then(|t| t.auc),
            test_ks: fitted.test.as_ref().and_then(|t| t.ks),
            ck: Checkpoint {
                metrics: Some(CheckpointMetrics {
                    best_epoch: fitted.outcome.best_epoch,
                    val_auc: v.auc,
                    val_ks: v.ks,
                }),
                model: fitted.model,
                train_seed: seed,
            },
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model {
            ck: io::load_checkpoint(&path).map_err(err)?,
            test_auc: None,
            test_ks: None,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_checkpoint(&path, &self.ck).map_err(err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.ck.train_seed
    }

    #[getter]
    fn best_epoch(&self) -> Option<usize> {
        self.ck.metrics.as_ref().map(|m| m.best_epoch)
    }

    #[getter]
    fn val_auc(&self) -> Option<f64> {
        self.ck.metrics.as_ref().and_then(|m| m.val_auc)
    }

    #[getter]
    fn val_ks(&self) -> Option<f64> {
        self.ck.metrics.as_ref().and_then(|m| m.val_ks)
    }

    /// Holdout metrics of a model trained with `holdout`; `None` otherwise.
    #[getter]
    fn test_auc(&self) -> Option<f64> {
        self.test_auc
    }

    #[getter]
    fn test_ks(&self) -> Option<f64> {
        self.test_ks
    }

    #[getter]
    fn metapaths(&self) -> Vec<String> {
        self.ck.model.paths().iter().map(|p| p.name().to_string()).collect()
    }

    /// `(id, score)` pairs for `ids`, or every company when omitted.
    #[pyo3(signature = (dataset, ids=None, seed=None))]
    fn predict(
        &self,
        py: Python<'_>,
        dataset: &Dataset,
        ids: Option<Vec<String>>,
        seed: Option<u64>,
    ) -> PyResult<Vec<(String, f64)>> {
        let d = &dataset.inner;
        let (ids, idx) = self.targets(d, ids)?;
        let seed = seed.unwrap_or_else(|| eval_seed(self.ck.train_seed));
        let m = &self.ck.model;
        let scores = py
            .detach(|| {
                let inputs = m.encode_inputs(&d.graph)?;
                m.predict(&d.graph, &inputs, &idx, seed)
            })
            .map_err(err)?;
        Ok(ids.into_iter().zip(scores).collect())
    }

    /// Semantic weights and the top-`k` instance weights per meta-path.
    #[pyo3(signature = (dataset, id, k=5, seed=None))]
    fn explain<'py>(
        &self,
        py: Python<'py>,
        dataset: &Dataset,
        id: String,
        k: usize,
        seed: Option<u64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let d = &dataset.inner;
        let (_, idx) = self.targets(d, Some(vec![id]))?;
        let seed = seed.unwrap_or_else(|| eval_seed(self.ck.train_seed));
        let m = &self.ck.model;
        let inputs = m.encode_inputs(&d.graph).map_err(err)?;
        let x = m.explain(&d.graph, &inputs, idx[0], k, seed).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("node_id", x.node_id)?;
        out.set_item("score", x.score)?;
        out.set_item("beta", x.beta)?;
        out.set_item("alpha", x.alpha)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        let auc = self.val_auc().map_or("None".to_string(), |a| format!("{a:.4}"));
        format!(
            "Model(metapaths={:?}, seed={}, val_auc={auc})",
            self.metapaths(),
            self.ck.train_seed
        )
    }
}

/// Area under the ROC curve; ties count one half.
#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<f64>) -> PyResult<f64> {
    hidam::train::auc(&scores, &labels).map_err(err)
}

/// Kolmogorov-Smirnov statistic, max |TPR - FPR|.
#[pyfunction]
fn ks(scores: Vec<f64>, labels: Vec<f64>) -> PyResult<f64> {
    hidam::train::ks(&scores, &labels).map_err(err)
}

#[pymodule]
fn pyhidam(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(ks, m)?)?;
    Ok(())
}
