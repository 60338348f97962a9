//! Gaussian likelihood-ratio test between two complex Gaussian hypotheses.
//!
//! Preprocessing factors each covariance once; scoring a vector costs two
//! triangular solves plus inner products. The naive mode keeps linear-domain
//! determinants and explicit inverses instead, which overflows for large N.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ComplexGaussianVector, HypothesisPair};
use crate::dataset::CsiMatrix;
use crate::error::{check_dim, Error, Result};
use crate::subspace::PcaBasis;

use super::Detector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrtMode {
    /// Cholesky factors and log-domain determinants.
    Stable,
    /// Linear-domain determinant and explicit inverse.
    Naive,
}

#[derive(Debug, Clone)]
enum Factorization {
    Stable {
        /// Lower Cholesky factor, row-major.
        lower: Vec<Complex64>,
    },
    Naive {
        det: f64,
        inverse: DMatrix<Complex64>,
    },
}

/// Precomputed per-hypothesis terms.
#[derive(Debug, Clone)]
struct ClassTerms {
    mean: Vec<Complex64>,
    factor: Factorization,
    log_det: f64,
    /// `L⁻¹μ` (stable) or `Σ⁻¹μ` (naive).
    weighted_mean: Vec<Complex64>,
    /// `μᴴ Σ⁻¹ μ`.
    mean_quad: f64,
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Solves `L w = g` for lower-triangular row-major `L`.
fn forward_substitute(lower: &[Complex64], g: &[Complex64], w: &mut [Complex64]) {
    let n = g.len();
    for i in 0..n {
        let row = &lower[i * n..i * n + i];
        let acc: Complex64 = row.iter().zip(&w[..i]).map(|(l, x)| l * x).sum();
        w[i] = (g[i] - acc) / lower[i * n + i];
    }
}

impl ClassTerms {
    fn new(mean: &[Complex64], cov: DMatrix<Complex64>, mode: LrtMode) -> Result<Self> {
        let n = mean.len();
        check_dim(n, cov.nrows())?;
        check_dim(n, cov.ncols())?;
        match mode {
            LrtMode::Stable => {
                let chol = Cholesky::new(cov)
                    .ok_or_else(|| Error::domain("covariance", "not positive definite"))?;
                let l = chol.l();
                let mut lower = vec![Complex64::new(0.0, 0.0); n * n];
                for i in 0..n {
                    for j in 0..=i {
                        lower[i * n + j] = l[(i, j)];
                    }
                }
                let log_det = 2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>();
                let mut weighted_mean = vec![Complex64::new(0.0, 0.0); n];
                forward_substitute(&lower, mean, &mut weighted_mean);
                let mean_quad = norm_sqr(&weighted_mean);
                Ok(ClassTerms {
                    mean: mean.to_vec(),
                    factor: Factorization::Stable { lower },
                    log_det,
                    weighted_mean,
                    mean_quad,
                })
            }
            LrtMode::Naive => {
                let det = cov.determinant().re;
                let inverse = cov
                    .clone()
                    .try_inverse()
                    .unwrap_or_else(|| DMatrix::from_element(n, n, Complex64::new(f64::NAN, f64::NAN)));
                let mu = nalgebra::DVector::from_column_slice(mean);
                let weighted = &inverse * &mu;
                let mean_quad = mu.dotc(&weighted).re;
                Ok(ClassTerms {
                    mean: mean.to_vec(),
                    factor: Factorization::Naive { det, inverse },
                    log_det: det.ln(),
                    weighted_mean: weighted.iter().copied().collect(),
                    mean_quad,
                })
            }
        }
    }
}

/// Log-likelihood ratio `ln f(G; H1) − ln f(G; H0)` for two complex Gaussian
/// hypotheses.
#[derive(Debug, Clone)]
pub struct LrtDetector {
    mode: LrtMode,
    dim: usize,
    classes: [ClassTerms; 2],
    /// `Σ₀⁻¹ − Σ₁⁻¹`, naive mode only.
    inverse_diff: Option<DMatrix<Complex64>>,
}

impl LrtDetector {
    /// Detector for the isotropic laws of a hypothesis pair.
    pub fn build(pair: &HypothesisPair, mode: LrtMode) -> Result<Self> {
        Self::from_laws(&pair.h0, &pair.h1, mode)
    }

    pub fn from_laws(h0: &ComplexGaussianVector, h1: &ComplexGaussianVector, mode: LrtMode) -> Result<Self> {
        check_dim(h0.dim(), h1.dim())?;
        if mode == LrtMode::Stable {
            for (name, v) in [("h0.iso_var", h0.iso_var()), ("h1.iso_var", h1.iso_var())] {
                if !(v > 0.0) {
                    return Err(Error::domain(name, format!("must be > 0, got {v}")));
                }
            }
        }
        let n = h0.dim();
        let cov = |v: f64| DMatrix::from_diagonal_element(n, n, Complex64::from(v));
        Self::from_covariances(h0.mean(), cov(h0.iso_var()), h1.mean(), cov(h1.iso_var()), mode)
    }

    /// General Hermitian covariances.
    pub fn from_covariances(
        mean0: &[Complex64],
        cov0: DMatrix<Complex64>,
        mean1: &[Complex64],
        cov1: DMatrix<Complex64>,
        mode: LrtMode,
    ) -> Result<Self> {
        check_dim(mean0.len(), mean1.len())?;
        let c0 = ClassTerms::new(mean0, cov0, mode)?;
        let c1 = ClassTerms::new(mean1, cov1, mode)?;
        let inverse_diff = match (&c0.factor, &c1.factor) {
            (Factorization::Naive { inverse: i0, .. }, Factorization::Naive { inverse: i1, .. }) => Some(i0 - i1),
            _ => None,
        };
        Ok(LrtDetector { mode, dim: mean0.len(), classes: [c0, c1], inverse_diff })
    }

    pub fn mode(&self) -> LrtMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, class: usize) -> &[Complex64] {
        &self.classes[class].mean
    }

    /// `ln det Σ_i` (non-finite in naive mode once the determinant overflows).
    pub fn log_det(&self, class: usize) -> f64 {
        self.classes[class].log_det
    }

    /// Linear-domain determinant, naive mode only.
    pub fn naive_det(&self, class: usize) -> Option<f64> {
        match self.classes[class].factor {
            Factorization::Naive { det, .. } => Some(det),
            Factorization::Stable { .. } => None,
        }
    }

    /// `μᴴ Σ⁻¹ μ` for hypothesis `class`.
    pub fn mean_quad(&self, class: usize) -> f64 {
        self.classes[class].mean_quad
    }

    fn constant(&self) -> f64 {
        let [c0, c1] = &self.classes;
        let det_term = match (&c0.factor, &c1.factor) {
            (Factorization::Naive { det: d0, .. }, Factorization::Naive { det: d1, .. }) => (d0 / d1).ln(),
            _ => c0.log_det - c1.log_det,
        };
        det_term + c0.mean_quad - c1.mean_quad
    }

    fn score_with(&self, g: &[Complex64], constant: f64, w0: &mut [Complex64], w1: &mut [Complex64]) -> f64 {
        let [c0, c1] = &self.classes;
        match (&c0.factor, &c1.factor) {
            (Factorization::Stable { lower: l0 }, Factorization::Stable { lower: l1 }) => {
                forward_substitute(l0, g, w0);
                forward_substitute(l1, g, w1);
                let cross = dotc(&c0.weighted_mean, w0) - dotc(&c1.weighted_mean, w1);
                constant + norm_sqr(w0) - norm_sqr(w1) - 2.0 * cross.re
            }
            _ => {
                let diff = self.inverse_diff.as_ref().expect("naive detector carries inverse difference");
                let n = self.dim;
                let a = diff.as_slice();
                let quad: Complex64 = (0..n)
                    .map(|j| g[j] * a[j * n..(j + 1) * n].iter().zip(g).map(|(x, y)| y.conj() * x).sum::<Complex64>())
                    .sum();
                let cross = dotc(&c0.weighted_mean, g) - dotc(&c1.weighted_mean, g);
                constant + quad.re - 2.0 * cross.re
            }
        }
    }

    /// Log-likelihood ratio of one vector.
    pub fn score(&self, g: &[Complex64]) -> Result<f64> {
        check_dim(self.dim, g.len())?;
        let mut w0 = vec![Complex64::new(0.0, 0.0); self.dim];
        let mut w1 = w0.clone();
        Ok(self.score_with(g, self.constant(), &mut w0, &mut w1))
    }
}

impl Detector for LrtDetector {
    fn score_batch(&self, data: &CsiMatrix) -> Result<Vec<f64>> {
        check_dim(self.dim, data.nrows())?;
        let constant = self.constant();
        let mut w0 = vec![Complex64::new(0.0, 0.0); self.dim];
        let mut w1 = w0.clone();
        let n = self.dim;
        let raw = data.as_slice();
        Ok((0..data.ncols())
            .map(|j| self.score_with(&raw[j * n..(j + 1) * n], constant, &mut w0, &mut w1))
            .collect())
    }

    fn lenient(&self) -> bool {
        self.mode == LrtMode::Naive
    }
}

/// LRT on PCA projections `z = U_Pᴴ(G − c)`.
#[derive(Debug, Clone)]
pub struct PcaLrtDetector {
    pub basis: PcaBasis,
    pub lrt: LrtDetector,
}

impl PcaLrtDetector {
    /// Projects both laws; an isotropic `σ² I_N` stays `σ² I_P` under an
    /// orthonormal basis, so only the means change.
    pub fn build(h0: &ComplexGaussianVector, h1: &ComplexGaussianVector, basis: &PcaBasis, mode: LrtMode) -> Result<Self> {
        check_dim(basis.n_dim(), h0.dim())?;
        check_dim(basis.n_dim(), h1.dim())?;
        let m0 = ComplexGaussianVector::new(basis.project(h0.mean())?, h0.iso_var())?;
        let m1 = ComplexGaussianVector::new(basis.project(h1.mean())?, h1.iso_var())?;
        Ok(PcaLrtDetector { basis: basis.clone(), lrt: LrtDetector::from_laws(&m0, &m1, mode)? })
    }

    pub fn from_pair(pair: &HypothesisPair, basis: &PcaBasis) -> Result<Self> {
        Self::build(&pair.h0, &pair.h1, basis, LrtMode::Stable)
    }
}

impl Detector for PcaLrtDetector {
    fn score_batch(&self, data: &CsiMatrix) -> Result<Vec<f64>> {
        self.lrt.score_batch(&self.basis.project_matrix(data)?)
    }

    fn lenient(&self) -> bool {
        self.lrt.lenient()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(mean: Vec<Complex64>, var: f64) -> ComplexGaussianVector {
        ComplexGaussianVector::new(mean, var).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_variance_has_zero_log_det() {
        for n in [1, 7, 64] {
            let d = LrtDetector::from_laws(&law(vec![c(1.0, 0.0); n], 1.0), &law(vec![c(0.0, 0.0); n], 1.0), LrtMode::Stable).unwrap();
            assert!(d.log_det(0).abs() < 1e-12 && d.log_det(1).abs() < 1e-12);
        }
    }

    #[test]
    fn naive_determinant_overflows_at_large_n() {
        let n = 1024;
        let h = law(vec![c(0.0, 0.0); n], 4.0);
        let naive = LrtDetector::from_laws(&h, &h, LrtMode::Naive).unwrap();
        assert!(!naive.naive_det(0).unwrap().is_finite());
        let stable = LrtDetector::from_laws(&h, &h, LrtMode::Stable).unwrap();
        assert!((stable.log_det(0) - 1024.0 * 4f64.ln()).abs() < 1e-9);
        assert!((stable.log_det(0) - 1419.57).abs() < 0.01);
        let g = vec![c(0.3, 0.1); n];
        assert!(naive.score(&g).unwrap().is_nan());
        assert_eq!(stable.score(&g).unwrap(), 0.0);
    }

    #[test]
    fn mean_quad_matches_isotropic_identity() {
        let mu: Vec<Complex64> = (0..8).map(|k| c(k as f64 - 3.0, 0.5 * k as f64)).collect();
        let d = LrtDetector::from_laws(&law(mu.clone(), 2.5), &law(vec![c(0.0, 0.0); 8], 1.0), LrtMode::Stable).unwrap();
        let expect = norm_sqr(&mu) / 2.5;
        assert!((d.mean_quad(0) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn stable_rejects_zero_variance() {
        let h = law(vec![c(0.0, 0.0); 3], 0.0);
        assert!(LrtDetector::from_laws(&h, &h, LrtMode::Stable).is_err());
        assert!(LrtDetector::from_laws(&h, &h, LrtMode::Naive).is_ok());
    }

    #[test]
    fn identical_hypotheses_score_zero() {
        let h = law(vec![c(1.0, -2.0), c(0.5, 0.5)], 3.0);
        let d = LrtDetector::from_laws(&h, &h, LrtMode::Stable).unwrap();
        for g in [[c(0.0, 0.0), c(1.0, 1.0)], [c(-7.0, 2.0), c(3.0, 0.0)]] {
            assert_eq!(d.score(&g).unwrap(), 0.0);
        }
    }

    #[test]
    fn direction_sanity() {
        let mu1 = vec![c(2.0, 1.0); 4];
        let d = LrtDetector::from_laws(&law(vec![c(0.0, 0.0); 4], 10.0), &law(mu1.clone(), 0.1), LrtMode::Stable).unwrap();
        assert!(d.score(&mu1).unwrap() > 0.0);
    }

    #[test]
    fn naive_matches_stable_at_small_n() {
        let h0 = law(vec![c(1.0, 0.0), c(0.0, -1.0), c(0.5, 0.5)], 1.5);
        let h1 = law(vec![c(0.0, 2.0), c(1.0, 0.0), c(0.0, 0.0)], 4.0);
        let s = LrtDetector::from_laws(&h0, &h1, LrtMode::Stable).unwrap();
        let n = LrtDetector::from_laws(&h0, &h1, LrtMode::Naive).unwrap();
        let g = [c(0.2, -0.3), c(1.1, 0.4), c(-2.0, 0.0)];
        assert!((s.score(&g).unwrap() - n.score(&g).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn batch_matches_single() {
        let h0 = law(vec![c(1.0, 0.0), c(0.0, -1.0)], 1.5);
        let h1 = law(vec![c(0.0, 2.0), c(1.0, 0.0)], 4.0);
        let d = LrtDetector::from_laws(&h0, &h1, LrtMode::Stable).unwrap();
        let x = CsiMatrix::from_fn(2, 5, |i, j| c(i as f64 - j as f64, 0.1 * j as f64));
        let batch = d.score_batch(&x).unwrap();
        for j in 0..5 {
            let col: Vec<Complex64> = x.column(j).iter().copied().collect();
            assert_eq!(batch[j], d.score(&col).unwrap());
        }
        assert!(d.score_batch(&CsiMatrix::zeros(3, 1)).is_err());
    }
}
