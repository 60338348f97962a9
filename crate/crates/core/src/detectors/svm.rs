//! Soft-margin kernel SVM trained by sequential minimal optimization with
//! second-order working-set selection.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{CsiDataset, CsiMatrix};
use crate::error::{check_dim, Error, Result};
use crate::subspace::PcaBasis;

use super::features::{featurize_matrix, FeatureScaler};
use super::Detector;

/// Kernel matrices up to this many entries are cached in full.
const FULL_CACHE_ENTRIES: usize = 1 << 24;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Kernel::Rbf { gamma } = *self {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::domain("gamma", format!("must be finite and > 0, got {gamma}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Box constraint.
    pub c: f64,
    /// KKT violation tolerance for the stopping rule.
    pub tol: f64,
    /// Iteration cap; `None` uses `max(10⁷, 100·n)`.
    pub max_iter: Option<usize>,
    /// Standardize features before training.
    pub standardize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, tol: 1e-4, max_iter: None, standardize: true }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain("c", format!("must be finite and > 0, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::domain("tol", format!("must be finite and > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// A trained classifier `f(x) = Σᵢ cᵢ k(svᵢ, s(x)) + b` where `s` is the
/// frozen feature scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub scaler: FeatureScaler,
    /// Standardized support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// `αᵢ·yᵢ` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    /// Solver iterations used.
    pub iterations: usize,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn n_support(&self) -> usize {
        self.dual_coefs.len()
    }

    /// Decision value of an already standardized feature vector.
    pub fn decision_standardized(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Primal weights in standardized coordinates, linear kernel only.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        if self.kernel != Kernel::Linear {
            return None;
        }
        let mut w = vec![0.0; self.dim()];
        for (sv, c) in self.support_vectors.iter().zip(&self.dual_coefs) {
            for (wk, x) in w.iter_mut().zip(sv) {
                *wk += c * x;
            }
        }
        Some(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SvmModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        let d = self.dim();
        check_dim(d, self.scaler.scale.len())?;
        check_dim(self.support_vectors.len(), self.dual_coefs.len())?;
        if self.support_vectors.is_empty() {
            return Err(Error::Degenerate("model has no support vectors".into()));
        }
        for sv in &self.support_vectors {
            check_dim(d, sv.len())?;
        }
        let limit = self.c * (1.0 + 1e-9);
        if self.dual_coefs.iter().any(|a| !(a.abs() <= limit)) {
            return Err(Error::domain("dual_coefs", "magnitude exceeds the box constraint"));
        }
        Ok(())
    }
}

/// Decision value of raw (unstandardized) features.
pub fn svm_score(model: &SvmModel, features: &[f64]) -> Result<f64> {
    Ok(model.decision_standardized(&model.scaler.apply(features)?))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

struct KernelRows<'a> {
    x: &'a [f64],
    d: usize,
    n: usize,
    kernel: Kernel,
    full: Option<Vec<f64>>,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [f64], d: usize, n: usize, kernel: Kernel) -> Self {
        let mut rows = KernelRows { x, d, n, kernel, full: None };
        if n * n <= FULL_CACHE_ENTRIES {
            let mut full = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let k = rows.eval(i, j);
                    full[i * n + j] = k;
                    full[j * n + i] = k;
                }
            }
            rows.full = Some(full);
        }
        rows
    }

    fn col(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        self.kernel.eval(self.col(i), self.col(j))
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        match &self.full {
            Some(full) => out.copy_from_slice(&full[i * self.n..(i + 1) * self.n]),
            None => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = self.eval(i, j);
                }
            }
        }
    }
}

/// Trains on the columns of `features` (d × n) with labels in {0, 1};
/// label 1 (H1) maps to positive decision values.
///
/// Samples are put in a canonical order before solving, so the result does
/// not depend on the order of the input columns.
pub fn svm_train(features: &DMatrix<f64>, labels: &[u8], kernel: Kernel, params: &SvmParams) -> Result<SvmModel> {
    kernel.validate()?;
    params.validate()?;
    let (d, n) = features.shape();
    check_dim(n, labels.len())?;
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::domain("labels", format!("must be 0 or 1, got {bad}")));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate("svm training needs samples from both classes".into()));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("features", "contain non-finite values"));
    }

    let raw = features.as_slice();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]).then_with(|| lex_cmp(&raw[a * d..(a + 1) * d], &raw[b * d..(b + 1) * d])));
    let sorted = DMatrix::from_fn(d, n, |i, j| features[(i, order[j])]);
    let y: Vec<f64> = order.iter().map(|&j| if labels[j] == 1 { 1.0 } else { -1.0 }).collect();

    let scaler = if params.standardize { FeatureScaler::fit(&sorted)? } else { FeatureScaler::identity(d) };
    let x = scaler.apply_matrix(&sorted)?;
    let rows = KernelRows::new(x.as_slice(), d, n, kernel);

    let c = params.c;
    let max_iter = params.max_iter.unwrap_or_else(|| (100 * n).max(10_000_000));
    let diag: Vec<f64> = (0..n).map(|i| rows.eval(i, i)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut k_i = vec![0.0; n];
    let mut k_j = vec![0.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut sel_i = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    sel_i = Some(t);
                }
            }
        }
        let Some(i) = sel_i else { break };
        rows.row(i, &mut k_i);

        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut sel_j = None;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let b = gmax + v;
            if b > 0.0 {
                let a = (diag[i] + diag[t] - 2.0 * k_i[t]).max(TAU);
                let obj = -b * b / a;
                if obj < best {
                    best = obj;
                    sel_j = Some(t);
                }
            }
        }
        if gmax + gmax2 < params.tol {
            break;
        }
        let Some(j) = sel_j else { break };
        rows.row(j, &mut k_j);
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (diag[i] + diag[j] - 2.0 * k_i[j]).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (k_i[t] * di + k_j[t] * dj);
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(rows.col(t).to_vec());
            dual_coefs.push(alpha[t] * y[t]);
        }
    }
    let model = SvmModel {
        kernel,
        c,
        tol: params.tol,
        scaler,
        support_vectors,
        dual_coefs,
        bias: -rho,
        iterations,
    };
    model.validate()?;
    Ok(model)
}

/// PCA projection followed by an SVM on interleaved real/imaginary features.
#[derive(Debug, Clone)]
pub struct PcaSvmDetector {
    pub basis: PcaBasis,
    pub model: SvmModel,
}

impl PcaSvmDetector {
    pub fn train(train: &CsiDataset, basis: &PcaBasis, kernel: Kernel, params: &SvmParams) -> Result<Self> {
        let features = featurize_matrix(&basis.project_matrix(&train.data)?);
        let model = svm_train(&features, &train.labels, kernel, params)?;
        Ok(PcaSvmDetector { basis: basis.clone(), model })
    }
}

impl Detector for PcaSvmDetector {
    fn score_batch(&self, data: &CsiMatrix) -> Result<Vec<f64>> {
        let features = self.model.scaler.apply_matrix(&featurize_matrix(&self.basis.project_matrix(data)?))?;
        Ok(features.column_iter().map(|col| self.model.decision_standardized(col.as_slice())).collect())
    }
}
