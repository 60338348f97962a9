use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dataset::CsiMatrix;
use crate::error::{check_dim, Error, Result};

/// Interleaves real and imaginary parts: `[re₀, im₀, re₁, im₁, …]`.
pub fn featurize(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Column-wise [`featurize`]: a `2P × M` real matrix.
pub fn featurize_matrix(z: &CsiMatrix) -> DMatrix<f64> {
    DMatrix::from_iterator(2 * z.nrows(), z.ncols(), z.iter().flat_map(|c| [c.re, c.im]))
}

/// Per-feature standardization frozen at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    /// Standard deviation, or 1 for constant features.
    pub scale: Vec<f64>,
}

impl FeatureScaler {
    /// Fits on the columns of `x` (features × samples) using the population
    /// standard deviation.
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let m = x.ncols();
        if m == 0 {
            return Err(Error::Degenerate("cannot fit a scaler on zero samples".into()));
        }
        let mut mean = Vec::with_capacity(x.nrows());
        let mut scale = Vec::with_capacity(x.nrows());
        for row in x.row_iter() {
            let mu = row.sum() / m as f64;
            let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64;
            let sd = var.sqrt();
            mean.push(mu);
            scale.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
        }
        Ok(FeatureScaler { mean, scale })
    }

    /// Identity scaler of dimension `d`.
    pub fn identity(d: usize) -> Self {
        FeatureScaler { mean: vec![0.0; d], scale: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect())
    }

    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x.nrows())?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[i]) / self.scale[i]))
    }
}
