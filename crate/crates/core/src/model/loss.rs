use crate::error::{HidamError, Result};

/// Probabilities are clamped to `[CLAMP, 1 − CLAMP]` before taking logs.
pub const CLAMP: f64 = 1e-12;

fn check_label(y: f64) -> Result<()> {
    if y == 0.0 || y == 1.0 {
        Ok(())
    } else {
        Err(HidamError::InvalidArgument(format!("label {y} is not 0 or 1")))
    }
}

/// Summed binary cross-entropy; positives are weighted by `pos_weight`.
pub fn bce_loss(probs: &[f64], labels: &[f64], pos_weight: f64) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(HidamError::shape(
            "bce_loss",
            format!("{} predictions vs {} labels", probs.len(), labels.len()),
        ));
    }
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(labels) {
        check_label(y)?;
        let p = p.clamp(CLAMP, 1.0 - CLAMP);
        total -= pos_weight * y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total)
}

/// Gradient of one sample's loss with respect to the pre-sigmoid logit,
/// consistent with the clamping in [`bce_loss`].
pub fn bce_logit_grad(prob: f64, label: f64, pos_weight: f64) -> f64 {
    let clamped_low = prob < CLAMP;
    let clamped_high = prob > 1.0 - CLAMP;
    let pos = if clamped_low || clamped_high { 0.0 } else { -pos_weight * label * (1.0 - prob) };
    let neg = if clamped_low || clamped_high { 0.0 } else { (1.0 - label) * prob };
    pos + neg
}
