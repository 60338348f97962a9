use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::CsiMatrix;
use crate::detectors::Detector;
use crate::error::{Error, Result};

/// Wall-clock seconds per full pass over a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub median_s: f64,
    pub p10_s: f64,
    pub p90_s: f64,
    pub repetitions: usize,
}

impl TimingStats {
    /// Summarizes raw samples; percentiles use linear interpolation.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::domain("repetitions", format!("must be >= 3, got {}", samples.len())));
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (s.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
        };
        Ok(TimingStats { median_s: q(0.5), p10_s: q(0.1), p90_s: q(0.9), repetitions: s.len() })
    }
}

/// Times `repetitions` decision passes at threshold 0 after one untimed
/// warm-up pass, and checks every pass reproduces the warm-up decisions.
pub fn bench_inference<D: Detector + ?Sized>(detector: &D, data: &CsiMatrix, repetitions: usize) -> Result<TimingStats> {
    if repetitions < 3 {
        return Err(Error::domain("repetitions", format!("must be >= 3, got {repetitions}")));
    }
    let reference = detector.decide_batch(data, 0.0)?;
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let decisions = detector.decide_batch(data, 0.0)?;
        samples.push(start.elapsed().as_secs_f64());
        if decisions != reference {
            return Err(Error::ImpureDetector);
        }
    }
    TimingStats::from_samples(&samples)
}
