use crate::error::{HidamError, Result};

fn class_counts(scores: &[f64], labels: &[f64]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(HidamError::shape(
            "metric",
            format!("{} scores vs {} labels", scores.len(), labels.len()),
        ));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(HidamError::NonFinite(format!("score {s}")));
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    let neg = labels.iter().filter(|&&y| y == 0.0).count();
    if pos + neg != labels.len() {
        return Err(HidamError::InvalidArgument("labels must be 0 or 1".into()));
    }
    if pos == 0 || neg == 0 {
        return Err(HidamError::Undefined(
            "both classes must be present".into(),
        ));
    }
    Ok((pos, neg))
}

/// Indices sorted by ascending score.
fn order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// Area under the ROC curve via the rank-sum statistic; tied scores count
/// one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let idx = order(scores);
    // Sum over tie groups of (positives in group) * (negatives below) plus
    // half the within-group positive/negative pairs.
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0usize, 0usize);
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] == 1.0 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        wins += gp as f64 * neg_below as f64 + 0.5 * gp as f64 * gn as f64;
        neg_below += gn;
        i = j;
    }
    Ok(wins / (pos as f64 * neg as f64))
}

/// Kolmogorov–Smirnov statistic `max |TPR − FPR|` over all thresholds.
pub fn ks(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut idx = order(scores);
    idx.reverse();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = 0.0f64;
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if labels[idx[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        best = best.max((tp as f64 / pos as f64 - fp as f64 / neg as f64).abs());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: [f64; 4] = [0.9, 0.8, 0.2, 0.1];

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&S, &[1.0, 1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(auc(&S, &[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.75);
        assert_eq!(auc(&[0.3; 4], &[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks(&S, &[1.0, 1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(ks(&S, &[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(ks(&[0.3; 4], &[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(auc(&S, &[1.0; 4]), Err(HidamError::Undefined(_))));
        assert!(matches!(ks(&S, &[0.0; 4]), Err(HidamError::Undefined(_))));
    }

    #[test]
    fn auc_invariant_under_monotone_maps() {
        let s = [0.1, -0.4, 2.0, 0.7, 0.7, 1.1];
        let y = [0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let base = auc(&s, &y).unwrap();
        let exp: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        let aff: Vec<f64> = s.iter().map(|v| 3.0 * v - 7.0).collect();
        assert_eq!(auc(&exp, &y).unwrap(), base);
        assert_eq!(auc(&aff, &y).unwrap(), base);
    }
}
