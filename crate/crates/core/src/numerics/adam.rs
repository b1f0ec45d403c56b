use super::matrix::Matrix;
use super::param::Parameter;
use crate::error::{HidamError, Result};

/// Adam moments for an ordered parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl Default for AdamState {
    fn default() -> Self {
        AdamState::new(0.9, 0.999, 1e-8)
    }
}

impl AdamState {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            beta1,
            beta2,
            eps,
            t: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    fn ensure_shapes(&mut self, params: &[&mut Parameter]) -> Result<()> {
        if self.first.is_empty() {
            self.first = params
                .iter()
                .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
                .collect();
            self.second = self.first.clone();
            return Ok(());
        }
        if self.first.len() != params.len() {
            return Err(HidamError::shape(
                "adam_step",
                format!("state tracks {} tensors, got {}", self.first.len(), params.len()),
            ));
        }
        for (m, p) in self.first.iter().zip(params) {
            if m.shape() != p.value.shape() {
                return Err(HidamError::shape(
                    "adam_step",
                    format!("moment shape {:?} vs parameter `{}` {:?}", m.shape(), p.name, p.value.shape()),
                ));
            }
        }
        Ok(())
    }
}

/// One Adam update with bias correction. Weight decay is decoupled: values
/// shrink by `lr·wd` before the adaptive step is applied.
pub fn adam_step(
    params: &mut [&mut Parameter],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    state.ensure_shapes(params)?;
    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    for ((p, m), v) in params
        .iter_mut()
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        let decay = lr * weight_decay;
        let values = p.value.data_mut();
        let grads = p.grad.data();
        for i in 0..values.len() {
            let g = grads[i];
            let mi = &mut m.data_mut()[i];
            *mi = b1 * *mi + (1.0 - b1) * g;
            let mhat = *mi / bias1;
            let vi = &mut v.data_mut()[i];
            *vi = b2 * *vi + (1.0 - b2) * g * g;
            let vhat = *vi / bias2;
            values[i] -= decay * values[i];
            values[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
