//! Labeled CSI datasets: seeded sampling, noise injection at a target SNR,
//! and Gaussian parameter estimation/perturbation.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{ComplexGaussianVector, HypothesisPair};
use crate::error::{Error, Result};
use crate::seed;

pub type CsiMatrix = DMatrix<Complex64>;

/// Draws one standard circularly-symmetric complex normal, `E|w|² = 1`.
pub(crate) fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `count` i.i.d. columns from `dist`.
pub fn sample_csi(dist: &ComplexGaussianVector, count: usize, seed: u64) -> CsiMatrix {
    let mut rng = seed::rng(seed);
    let sigma = dist.iso_var().sqrt();
    let n = dist.dim();
    let mean = dist.mean();
    let mut out = CsiMatrix::zeros(n, count);
    for mut col in out.column_iter_mut() {
        for (x, m) in col.iter_mut().zip(mean) {
            *x = m + standard_complex(&mut rng) * sigma;
        }
    }
    out
}

/// Receiver noise level expressed as an SNR against a reference power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub snr_db: f64,
    /// Average per-dimension power that the SNR is measured against.
    pub ref_power: f64,
}

impl NoiseConfig {
    /// SNR referenced to the average per-dimension power of the H0 channel.
    pub fn for_pair(pair: &HypothesisPair, snr_db: f64) -> Self {
        NoiseConfig { snr_db, ref_power: pair.h0.mean_power() }
    }

    pub fn noise_var(&self) -> f64 {
        self.ref_power / 10f64.powf(self.snr_db / 10.0)
    }
}

/// Adds `CN(0, σ_n² I)` noise to every column.
pub fn add_awgn(data: &CsiMatrix, noise: &NoiseConfig, seed: u64) -> Result<CsiMatrix> {
    if !(noise.ref_power.is_finite() && noise.ref_power > 0.0) {
        return Err(Error::domain("ref_power", format!("must be > 0, got {}", noise.ref_power)));
    }
    let sigma = noise.noise_var().sqrt();
    let mut rng = seed::rng(seed);
    let mut out = data.clone();
    for mut col in out.column_iter_mut() {
        for x in col.iter_mut() {
            *x += standard_complex(&mut rng) * sigma;
        }
    }
    Ok(out)
}

/// CSI vectors as columns with 0/1 hypothesis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiDataset {
    pub data: CsiMatrix,
    pub labels: Vec<u8>,
    pub per_class: usize,
}

impl CsiDataset {
    pub fn new(data: CsiMatrix, labels: Vec<u8>) -> Result<Self> {
        if data.ncols() != labels.len() {
            return Err(Error::DimensionMismatch { expected: data.ncols(), got: labels.len() });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::domain("labels", format!("labels must be 0 or 1, got {bad}")));
        }
        let ones = labels.iter().filter(|&&l| l == 1).count();
        let zeros = labels.len() - ones;
        if zeros != ones || zeros == 0 {
            return Err(Error::Degenerate(format!(
                "classes must be non-empty and balanced, got {zeros} H0 and {ones} H1 columns"
            )));
        }
        Ok(CsiDataset { data, labels, per_class: zeros })
    }

    pub fn n_dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Columns carrying `label`, in dataset order.
    pub fn class_columns(&self, label: u8) -> CsiMatrix {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == label).collect();
        self.data.select_columns(&idx)
    }

    /// Writes `label,re_0,im_0,...` with round-trippable 17-digit floats.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("label");
        for k in 0..self.n_dim() {
            header.push_str(&format!(",re_{k},im_{k}"));
        }
        writeln!(out, "{header}")?;
        for (j, col) in self.data.column_iter().enumerate() {
            let mut line = self.labels[j].to_string();
            for x in col.iter() {
                line.push_str(&format!(",{:.16e},{:.16e}", x.re, x.im));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(Error::Parse { line: 1, reason: "empty file".into() })??;
        let fields: Vec<&str> = header.trim_end().split(',').collect();
        if fields.first() != Some(&"label") || fields.len() < 3 || (fields.len() - 1) % 2 != 0 {
            return Err(Error::Parse { line: 1, reason: "expected header `label,re_0,im_0,...`".into() });
        }
        for (k, pair) in fields[1..].chunks(2).enumerate() {
            if pair[0] != format!("re_{k}") || pair[1] != format!("im_{k}") {
                return Err(Error::Parse { line: 1, reason: format!("unexpected columns `{}`,`{}`", pair[0], pair[1]) });
            }
        }
        let n = (fields.len() - 1) / 2;
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.trim_end().split(',').collect();
            if parts.len() != 1 + 2 * n {
                return Err(Error::Parse { line: lineno, reason: format!("expected {} fields, got {}", 1 + 2 * n, parts.len()) });
            }
            let label: u8 = parts[0]
                .parse()
                .map_err(|_| Error::Parse { line: lineno, reason: format!("bad label `{}`", parts[0]) })?;
            labels.push(label);
            for pair in parts[1..].chunks(2) {
                let parse = |s: &str| -> Result<f64> {
                    s.parse().map_err(|_| Error::Parse { line: lineno, reason: format!("bad number `{s}`") })
                };
                values.push(Complex64::new(parse(pair[0])?, parse(pair[1])?));
            }
        }
        let data = CsiMatrix::from_vec(n, labels.len(), values);
        CsiDataset::new(data, labels)
    }
}

/// Samples `per_class` noisy columns under H0 followed by `per_class` under H1.
pub fn build_dataset(pair: &HypothesisPair, per_class: usize, noise: &NoiseConfig, seed: u64) -> Result<CsiDataset> {
    if per_class == 0 {
        return Err(Error::domain("per_class", "must be >= 1"));
    }
    let x0 = add_awgn(&sample_csi(&pair.h0, per_class, seed::derive(seed, &[0, 0])), noise, seed::derive(seed, &[0, 1]))?;
    let x1 = add_awgn(&sample_csi(&pair.h1, per_class, seed::derive(seed, &[1, 0])), noise, seed::derive(seed, &[1, 1]))?;
    let n = pair.dim();
    let mut data = CsiMatrix::zeros(n, 2 * per_class);
    data.columns_mut(0, per_class).copy_from(&x0);
    data.columns_mut(per_class, per_class).copy_from(&x1);
    let labels = std::iter::repeat_n(0u8, per_class).chain(std::iter::repeat_n(1u8, per_class)).collect();
    Ok(CsiDataset { data, labels, per_class })
}

/// Sample mean and pooled isotropic variance of a set of CSI columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimate {
    pub mean: Vec<Complex64>,
    pub iso_var: f64,
    pub sample_count: usize,
}

impl GaussianEstimate {
    pub fn to_law(&self) -> Result<ComplexGaussianVector> {
        ComplexGaussianVector::new(self.mean.clone(), self.iso_var)
    }
}

/// Column mean, and the unbiased per-dimension variance averaged over
/// dimensions.
pub fn estimate_gaussian_params(samples: &CsiMatrix) -> Result<GaussianEstimate> {
    let (n, m) = samples.shape();
    if m < 2 {
        return Err(Error::Degenerate(format!("need at least 2 samples, got {m}")));
    }
    let mean: Vec<Complex64> = samples.row_iter().map(|r| r.sum() / m as f64).collect();
    let ss: f64 = samples
        .column_iter()
        .map(|c| c.iter().zip(&mean).map(|(x, mu)| (x - mu).norm_sqr()).sum::<f64>())
        .sum();
    Ok(GaussianEstimate { mean, iso_var: ss / ((m - 1) as f64 * n as f64), sample_count: m })
}

/// Relative multiplicative error: each mean coordinate and the variance are
/// scaled by `1 + eps·u` with `u ~ U[-1, 1]` drawn independently.
pub fn perturb_params(est: &GaussianEstimate, eps: f64, seed: u64) -> Result<GaussianEstimate> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::domain("eps", format!("must be finite and >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(est.clone());
    }
    let mut rng = seed::rng(seed);
    let mean = est
        .mean
        .iter()
        .map(|m| m * (1.0 + eps * rng.random_range(-1.0..=1.0)))
        .collect();
    let iso_var = est.iso_var * (1.0 + eps * rng.random_range(-1.0..=1.0));
    if !(iso_var > 0.0) {
        return Err(Error::domain("iso_var", format!("perturbed variance {iso_var} is not positive")));
    }
    Ok(GaussianEstimate { mean, iso_var, sample_count: est.sample_count })
}
