//! Differentiable primitives. Each forward function has a matching
//! `*_backward` that maps an upstream gradient to input gradients.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use super::param::Parameter;
use crate::error::{HidamError, Result};

/// Guard used by [`l2_normalize`] against division by a vanishing norm.
pub const NORM_EPS: f64 = 1e-12;

/// `W · x`, the projection used for every entity encoder.
pub fn linear(x: &[f64], w: &Parameter) -> Result<Vec<f64>> {
    w.value.matvec(x)
}

/// Accumulates `∂L/∂W += g xᵀ` and returns `∂L/∂x = Wᵀ g`.
pub fn linear_backward(x: &[f64], w: &mut Parameter, grad_out: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = w.value.shape();
    if x.len() != cols || grad_out.len() != rows {
        return Err(HidamError::shape(
            "linear_backward",
            format!(
                "weight {rows}x{cols}, input {}, upstream {}",
                x.len(),
                grad_out.len()
            ),
        ));
    }
    w.grad.add_outer(1.0, grad_out, x);
    let mut dx = vec![0.0; cols];
    w.value.matvec_t_acc(grad_out, &mut dx);
    Ok(dx)
}

pub fn concat_rows(parts: &[&[f64]]) -> Vec<f64> {
    let mut out = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}

/// Splits an upstream gradient back into the pieces that were concatenated.
pub fn concat_rows_backward(grad: &[f64], sizes: &[usize]) -> Result<Vec<Vec<f64>>> {
    if sizes.iter().sum::<usize>() != grad.len() {
        return Err(HidamError::shape(
            "concat_rows_backward",
            format!("sizes {:?} do not sum to {}", sizes, grad.len()),
        ));
    }
    let mut offset = 0;
    Ok(sizes
        .iter()
        .map(|&s| {
            let piece = grad[offset..offset + s].to_vec();
            offset += s;
            piece
        })
        .collect())
}

pub fn elementwise_add(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(HidamError::shape(
            "elementwise_add",
            format!("{} vs {}", a.len(), b.len()),
        ));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

/// Addition passes the upstream gradient to both operands unchanged.
pub fn elementwise_add_backward(grad: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (grad.to_vec(), grad.to_vec())
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient of sigmoid given its output `y`.
#[inline]
pub fn sigmoid_backward(y: f64, grad: f64) -> f64 {
    grad * y * (1.0 - y)
}

/// Pointwise activations. The attention-score nonlinearity is always
/// `LeakyRelu`; residual and semantic activations are configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu(f64),
    Elu,
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn forward(self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.apply(v)).collect()
    }

    pub fn backward(self, x: &[f64], grad: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(grad)
            .map(|(&v, &g)| g * self.derivative(v))
            .collect()
    }
}

pub fn leaky_relu(x: &[f64], slope: f64) -> Vec<f64> {
    Activation::LeakyRelu(slope).forward(x)
}

pub fn leaky_relu_backward(x: &[f64], grad: &[f64], slope: f64) -> Vec<f64> {
    Activation::LeakyRelu(slope).backward(x, grad)
}

/// Softmax computed independently inside each index group.
pub fn softmax_over_group(scores: &[f64], groups: &[Range<usize>]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; scores.len()];
    for g in groups {
        if g.is_empty() {
            return Err(HidamError::InvalidArgument(
                "softmax over an empty group".into(),
            ));
        }
        if g.end > scores.len() {
            return Err(HidamError::shape(
                "softmax_over_group",
                format!("group {:?} exceeds {} scores", g, scores.len()),
            ));
        }
        softmax_into(&scores[g.clone()], &mut out[g.clone()]);
    }
    Ok(out)
}

/// Single-group softmax with max subtraction. `scores` must be nonempty.
#[inline]
pub fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Given softmax outputs `p` and upstream `g`, returns `p ⊙ (g − ⟨p, g⟩)`
/// within each group.
pub fn softmax_over_group_backward(
    probs: &[f64],
    grad: &[f64],
    groups: &[Range<usize>],
) -> Vec<f64> {
    let mut out = vec![0.0; probs.len()];
    for g in groups {
        softmax_backward_into(&probs[g.clone()], &grad[g.clone()], &mut out[g.clone()]);
    }
    out
}

#[inline]
pub fn softmax_backward_into(probs: &[f64], grad: &[f64], out: &mut [f64]) {
    let inner = dot(probs, grad);
    for ((o, &p), &g) in out.iter_mut().zip(probs).zip(grad) {
        *o = p * (g - inner);
    }
}

/// Returns `x / max(‖x‖, ε)` and the (unguarded) norm.
pub fn l2_normalize(x: &[f64]) -> (Vec<f64>, f64) {
    let norm = dot(x, x).sqrt();
    let denom = norm.max(NORM_EPS);
    (x.iter().map(|v| v / denom).collect(), norm)
}

/// Backward of [`l2_normalize`] given its output `y` and the input norm.
pub fn l2_normalize_backward(y: &[f64], norm: f64, grad: &[f64]) -> Vec<f64> {
    if norm <= NORM_EPS {
        return grad.iter().map(|g| g / NORM_EPS).collect();
    }
    let inner = dot(y, grad);
    y.iter()
        .zip(grad)
        .map(|(&yi, &gi)| (gi - yi * inner) / norm)
        .collect()
}

/// Row-wise helper used by tests and the baseline: `W x + b`.
pub fn affine(w: &Matrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut out = w.matvec(x)?;
    if b.len() != out.len() {
        return Err(HidamError::shape(
            "affine",
            format!("bias {} vs output {}", b.len(), out.len()),
        ));
    }
    for (o, bi) in out.iter_mut().zip(b) {
        *o += bi;
    }
    Ok(out)
}
