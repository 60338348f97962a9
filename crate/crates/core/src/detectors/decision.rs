use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn as_label(self) -> u8 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub score: f64,
    pub label: Hypothesis,
    pub threshold: f64,
}

fn threshold_test(score: f64, threshold: f64) -> Decision {
    // Ties go to H0.
    let label = if score > threshold { Hypothesis::H1 } else { Hypothesis::H0 };
    Decision { score, label, threshold }
}

/// Thresholds a score, rejecting non-finite values.
pub fn decide(score: f64, threshold: f64) -> Result<Decision> {
    if !score.is_finite() {
        return Err(Error::NonFiniteScore(score));
    }
    Ok(threshold_test(score, threshold))
}

/// Thresholds a score, sending non-finite values to H0.
pub fn decide_lenient(score: f64, threshold: f64) -> Decision {
    if score.is_finite() {
        threshold_test(score, threshold)
    } else {
        Decision { score, label: Hypothesis::H0, threshold }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(decide(1.0, 0.0).unwrap().label, Hypothesis::H1);
        assert_eq!(decide(0.0, 0.0).unwrap().label, Hypothesis::H0);
        assert_eq!(decide(-0.5, -1.0).unwrap().label, Hypothesis::H1);
    }

    #[test]
    fn non_finite_scores() {
        for s in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            assert!(matches!(decide(s, 0.0), Err(Error::NonFiniteScore(_))));
            assert_eq!(decide_lenient(s, 0.0).label, Hypothesis::H0);
        }
    }
}
