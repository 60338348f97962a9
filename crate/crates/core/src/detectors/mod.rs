//! Binary detectors between "scatterer absent" (H0) and "present" (H1).

mod decision;
mod features;
mod lrt;
mod svm;

pub use decision::{decide, decide_lenient, Decision, Hypothesis};
pub use features::{featurize, featurize_matrix, FeatureScaler};
pub use lrt::{LrtDetector, LrtMode, PcaLrtDetector};
pub use svm::{svm_score, svm_train, Kernel, PcaSvmDetector, SvmModel, SvmParams};

use crate::dataset::CsiMatrix;
use crate::error::Result;

/// A trained detector. Larger scores favour H1.
pub trait Detector: Sync {
    /// One score per column of `data`.
    fn score_batch(&self, data: &CsiMatrix) -> Result<Vec<f64>>;

    /// Whether non-finite scores are mapped to H0 instead of rejected.
    fn lenient(&self) -> bool {
        false
    }

    /// Labels at threshold `threshold`.
    fn decide_batch(&self, data: &CsiMatrix, threshold: f64) -> Result<Vec<u8>> {
        decide_scores(&self.score_batch(data)?, threshold, self.lenient())
    }
}

/// Labels for precomputed scores; `lenient` sends non-finite scores to H0
/// instead of failing.
pub fn decide_scores(scores: &[f64], threshold: f64, lenient: bool) -> Result<Vec<u8>> {
    scores
        .iter()
        .map(|&s| {
            let d = if lenient { decide_lenient(s, threshold) } else { decide(s, threshold)? };
            Ok(d.label.as_label())
        })
        .collect()
}
