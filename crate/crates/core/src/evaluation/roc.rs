use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Empirical ROC curve for the rule "decide H1 iff score > threshold".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    /// `(fpr, tpr)` pairs, nondecreasing in both coordinates, from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    /// Threshold producing each point; `+∞` first and `−∞` last.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// Sweeps the threshold over every distinct score. Tied scores move the
/// curve diagonally, so the trapezoidal area equals the tie-corrected
/// Mann–Whitney statistic.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocResult> {
    check_dim(scores.len(), labels.len())?;
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::NonFiniteScore(*s));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.iter().filter(|&&l| l == 0).count();
    if positives + negatives != labels.len() {
        return Err(Error::domain("labels", "must be 0 or 1"));
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::Degenerate("ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (np, nn) = (positives as f64, negatives as f64);
    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        // Scores above the next distinct value are now declared H1.
        let next = if k < order.len() { scores[order[k]] } else { f64::NEG_INFINITY };
        points.push((fp as f64 / nn, tp as f64 / np));
        thresholds.push(next);
    }
    let auc = points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
    Ok(RocResult { points, thresholds, auc })
}

/// Fraction of decisions that differ from the labels.
pub fn error_rate(decisions: &[u8], labels: &[u8]) -> Result<f64> {
    check_dim(labels.len(), decisions.len())?;
    if labels.is_empty() {
        return Err(Error::Degenerate("error rate of an empty set".into()));
    }
    let wrong = decisions.iter().zip(labels).filter(|(d, l)| d != l).count();
    Ok(wrong as f64 / labels.len() as f64)
}
