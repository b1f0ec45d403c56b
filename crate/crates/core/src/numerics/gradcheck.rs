use rand::seq::index::sample;

use super::matrix::Matrix;
use super::param::ParamStore;
use super::rng::rng_from;
use crate::error::{HidamError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub eps: f64,
    /// Tensors larger than this are checked on a random subsample of this size.
    pub coords_per_tensor: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            eps: 1e-5,
            coords_per_tensor: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub coords_checked: usize,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub tensors: Vec<TensorCheck>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients with central differences.
///
/// `loss` must be deterministic and must accumulate gradients into the
/// store's parameters when called; it is first invoked once on zeroed
/// gradients to obtain the analytic values, then repeatedly on perturbed
/// values. Parameter values and gradients are restored before returning.
pub fn grad_check<S, F>(store: &mut S, mut loss: F, cfg: GradCheckConfig) -> Result<GradCheckReport>
where
    S: ParamStore,
    F: FnMut(&mut S) -> Result<f64>,
{
    store.zero_grad();
    let base = loss(store)?;
    if !base.is_finite() {
        return Err(HidamError::NonFinite(format!("loss {base} at unperturbed parameters")));
    }
    let analytic: Vec<Matrix> = store.params().iter().map(|p| p.grad.clone()).collect();
    let mut rng = rng_from(cfg.seed);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        tensors: Vec::with_capacity(analytic.len()),
    };

    for (k, grads) in analytic.iter().enumerate() {
        let n = grads.len();
        let coords: Vec<usize> = if n <= cfg.coords_per_tensor {
            (0..n).collect()
        } else {
            let mut c = sample(&mut rng, n, cfg.coords_per_tensor).into_vec();
            c.sort_unstable();
            c
        };
        let mut worst = 0.0f64;
        for &c in &coords {
            let original = store.params()[k].value.data()[c];
            store.params_mut()[k].value.data_mut()[c] = original + cfg.eps;
            let plus = loss(store)?;
            store.params_mut()[k].value.data_mut()[c] = original - cfg.eps;
            let minus = loss(store)?;
            store.params_mut()[k].value.data_mut()[c] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(HidamError::NonFinite(format!(
                    "loss at perturbed coordinate {c} of `{}`",
                    store.params()[k].name
                )));
            }
            let numeric = (plus - minus) / (2.0 * cfg.eps);
            worst = worst.max(relative_error(grads.data()[c], numeric));
        }
        report.max_rel_err = report.max_rel_err.max(worst);
        report.tensors.push(TensorCheck {
            name: store.params()[k].name.clone(),
            coords_checked: coords.len(),
            max_rel_err: worst,
        });
    }

    for (p, g) in store.params_mut().into_iter().zip(analytic) {
        p.grad = g;
    }
    Ok(report)
}
