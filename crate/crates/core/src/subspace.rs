//! PCA of pooled CSI, the two-class mixture covariance, and the
//! Bhattacharyya error bound in the retained subspace.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::HypothesisPair;
use crate::dataset::{CsiDataset, CsiMatrix};
use crate::error::{check_dim, Error, Result};

/// Top-P left singular vectors of the centered pooled data.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// N×P with orthonormal columns, ordered by decreasing singular value.
    pub basis: CsiMatrix,
    /// All singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    pub centering_mean: Vec<Complex64>,
}

impl PcaBasis {
    pub fn p(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// The nested basis made of the first `p` directions.
    pub fn truncate(&self, p: usize) -> Result<PcaBasis> {
        if p == 0 || p > self.p() {
            return Err(Error::domain("p", format!("must be in 1..={}, got {p}", self.p())));
        }
        Ok(PcaBasis {
            basis: self.basis.columns(0, p).into_owned(),
            singular_values: self.singular_values.clone(),
            centering_mean: self.centering_mean.clone(),
        })
    }

    /// `z = U_Pᴴ (x − c)`.
    pub fn project(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.n_dim(), x.len())?;
        let centered: Vec<Complex64> = x.iter().zip(&self.centering_mean).map(|(a, c)| a - c).collect();
        Ok(self.project_centered(&centered))
    }

    /// `Uᴴ d` for a vector already expressed relative to the centering mean
    /// (or a difference of two vectors, where the mean cancels).
    pub fn project_centered(&self, d: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_dim();
        let u = self.basis.as_slice();
        (0..self.p())
            .map(|j| u[j * n..(j + 1) * n].iter().zip(d).map(|(a, b)| a.conj() * b).sum())
            .collect()
    }

    /// Projects every column; the result is P×M.
    pub fn project_matrix(&self, x: &CsiMatrix) -> Result<CsiMatrix> {
        check_dim(self.n_dim(), x.nrows())?;
        let mut out = CsiMatrix::zeros(self.p(), x.ncols());
        let mut centered = vec![Complex64::new(0.0, 0.0); self.n_dim()];
        for (col, mut dst) in x.column_iter().zip(out.column_iter_mut()) {
            for ((c, a), m) in centered.iter_mut().zip(col.iter()).zip(&self.centering_mean) {
                *c = a - m;
            }
            for (d, v) in dst.iter_mut().zip(self.project_centered(&centered)) {
                *d = v;
            }
        }
        Ok(out)
    }

    /// Writes `index,singular_value` rows (1-based index) for elbow plots.
    pub fn write_scree<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,singular_value")?;
        for (i, s) in self.singular_values.iter().enumerate() {
            writeln!(out, "{},{:.16e}", i + 1, s)?;
        }
        Ok(())
    }
}

/// PCA of the dataset's pooled columns.
pub fn pca_fit(dataset: &CsiDataset, p: usize) -> Result<PcaBasis> {
    pca_fit_matrix(&dataset.data, p)
}

/// PCA of an arbitrary N×M matrix whose columns are observations.
pub fn pca_fit_matrix(x: &CsiMatrix, p: usize) -> Result<PcaBasis> {
    let (n, m) = x.shape();
    let max_p = n.min(m);
    if p == 0 || p > max_p {
        return Err(Error::domain("p", format!("must be in 1..={max_p}, got {p}")));
    }
    let centering_mean: Vec<Complex64> = x.row_iter().map(|r| r.sum() / m as f64).collect();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        for (v, c) in col.iter_mut().zip(&centering_mean) {
            *v -= c;
        }
    }
    let svd = centered.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    Ok(PcaBasis {
        basis: u.columns(0, p).into_owned(),
        singular_values: svd.singular_values.iter().copied().collect(),
        centering_mean,
    })
}

/// Covariance of the equal-prior mixture: `α I + β u uᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCovariance {
    pub alpha: f64,
    pub beta: f64,
    /// `μ₀ − μ₁`.
    pub u: Vec<Complex64>,
}

impl MixtureCovariance {
    pub fn dense(&self) -> DMatrix<Complex64> {
        let u = DVector::from_column_slice(&self.u);
        let n = self.u.len();
        DMatrix::<Complex64>::identity(n, n) * Complex64::from(self.alpha) + (&u * u.adjoint()) * Complex64::from(self.beta)
    }
}

pub fn mixture_covariance(pair: &HypothesisPair) -> MixtureCovariance {
    MixtureCovariance {
        alpha: 0.5 * (pair.h0.iso_var() + pair.h1.iso_var()),
        beta: 0.25,
        u: pair.h0.mean().iter().zip(pair.h1.mean()).map(|(a, b)| a - b).collect(),
    }
}

/// Dominant eigenvalue of the (projected) mixture covariance and its gap
/// over the isotropic floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingSnr {
    pub lambda1: f64,
    pub gap: f64,
}

/// With `basis = None` the full space is used.
pub fn sensing_snr(mix: &MixtureCovariance, basis: Option<&PcaBasis>) -> Result<SensingSnr> {
    let energy: f64 = match basis {
        Some(b) => {
            check_dim(b.n_dim(), mix.u.len())?;
            b.project_centered(&mix.u).iter().map(|z| z.norm_sqr()).sum()
        }
        None => mix.u.iter().map(|z| z.norm_sqr()).sum(),
    };
    let gap = mix.beta * energy;
    Ok(SensingSnr { lambda1: mix.alpha + gap, gap })
}

/// Bhattacharyya distance between `CN(m0, var0 I_P)` and `CN(m1, var1 I_P)`:
///
/// `‖m1 − m0‖² / (2(var0 + var1)) + P ln((var0 + var1) / (2 √(var0 var1)))`.
///
/// This is the exact value for circularly-symmetric complex laws, whose
/// Bhattacharyya coefficient is `∫ √(p0 p1) = exp(−D_B)`.
pub fn bhattacharyya_distance(m0: &[Complex64], m1: &[Complex64], var0: f64, var1: f64) -> Result<f64> {
    check_dim(m0.len(), m1.len())?;
    for (name, v) in [("var0", var0), ("var1", var1)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(name, format!("must be > 0, got {v}")));
        }
    }
    let p = m0.len() as f64;
    let dist2: f64 = m0.iter().zip(m1).map(|(a, b)| (b - a).norm_sqr()).sum();
    let sum = var0 + var1;
    let log_term = (sum / (2.0 * (var0 * var1).sqrt())).ln().max(0.0);
    Ok(dist2 / (2.0 * sum) + p * log_term)
}

/// Equal-prior Bayes error bound `½ e^{−D_B}`.
pub fn error_bound(d_b: f64) -> Result<f64> {
    if d_b.is_nan() || d_b < 0.0 {
        return Err(Error::domain("d_b", format!("must be >= 0, got {d_b}")));
    }
    Ok(0.5 * (-d_b).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub d_b: f64,
    pub pe_bound: f64,
    pub lambda1: f64,
    pub sensing_snr: f64,
}

/// Bound for a pair of isotropic laws, after projection onto `basis` if given.
pub fn bound_report(pair: &HypothesisPair, basis: Option<&PcaBasis>) -> Result<BoundReport> {
    let (m0, m1) = match basis {
        Some(b) => (b.project(pair.h0.mean())?, b.project(pair.h1.mean())?),
        None => (pair.h0.mean().to_vec(), pair.h1.mean().to_vec()),
    };
    let d_b = bhattacharyya_distance(&m0, &m1, pair.h0.iso_var(), pair.h1.iso_var())?;
    let snr = sensing_snr(&mixture_covariance(pair), basis)?;
    Ok(BoundReport { d_b, pe_bound: error_bound(d_b)?, lambda1: snr.lambda1, sensing_snr: snr.gap })
}
