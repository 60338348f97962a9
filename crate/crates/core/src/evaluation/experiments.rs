//! Experiment drivers: error vs. subspace dimension, ROC vs. SNR,
//! parameter perturbation, and inference timing.
//!
//! Each grid point draws its own training and test splits from a seed derived
//! from the base seed and the grid coordinates, so results do not depend on
//! evaluation order. All detectors at a grid point see the same data.

use std::time::Instant;

use rayon::prelude::*;

use crate::channel::HypothesisPair;
use crate::config::{DetectorId, Experiment, ExperimentConfig};
use crate::dataset::{build_dataset, estimate_gaussian_params, perturb_params, CsiDataset, NoiseConfig};
use crate::detectors::{decide_scores, Detector, LrtDetector, LrtMode, PcaLrtDetector, PcaSvmDetector};
use crate::error::Result;
use crate::seed;
use crate::subspace::{bound_report, pca_fit, PcaBasis};

use super::records::{BoundRow, RocCurve, SweepRecord, TimingRow};
use super::roc::{error_rate, roc_auc, RocResult};
use super::timing::bench_inference;

const TRAIN: u64 = 0x7472_6169_6e;
const TEST: u64 = 0x7465_7374;
const PERTURB: u64 = 0x7065_7274;

/// Noise-free laws and the noisy laws seen at one SNR.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub clean: HypothesisPair,
    pub noise: NoiseConfig,
    pub noisy: HypothesisPair,
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig, snr_db: f64) -> Result<Self> {
        let clean = cfg.channel_model()?.hypotheses(cfg.n_dim)?;
        let noise = NoiseConfig::for_pair(&clean, snr_db);
        let noisy = clean.with_noise(noise.noise_var())?;
        Ok(Scenario { clean, noise, noisy })
    }

    /// Disjoint training and test splits drawn from `point_seed`.
    pub fn splits(&self, per_class: usize, point_seed: u64) -> Result<(CsiDataset, CsiDataset)> {
        let train = build_dataset(&self.clean, per_class, &self.noise, seed::derive(point_seed, &[TRAIN]))?;
        let test = build_dataset(&self.clean, per_class, &self.noise, seed::derive(point_seed, &[TEST]))?;
        Ok((train, test))
    }
}

/// Seed of the grid point `(n, p, snr)`.
pub fn point_seed(base: u64, n: usize, p: usize, snr_db: f64) -> u64 {
    seed::derive(base, &[n as u64, p as u64, seed::real_key(snr_db)])
}

/// A trained detector and how long training took.
pub struct Trained {
    pub detector: Box<dyn Detector + Send>,
    pub train_time_s: f64,
}

/// Builds detector `id` from Gaussian laws (used by the LRT variants) or
/// training data (used by the SVMs). `basis` must already be truncated to P.
pub fn train_detector(
    id: DetectorId,
    cfg: &ExperimentConfig,
    laws: &HypothesisPair,
    train: &CsiDataset,
    basis: Option<&PcaBasis>,
) -> Result<Trained> {
    let start = Instant::now();
    let pca = || basis.expect("PCA detectors need a basis");
    let detector: Box<dyn Detector + Send> = match id {
        DetectorId::FullLrt => Box::new(LrtDetector::build(laws, LrtMode::Stable)?),
        DetectorId::FullLrtNaive => Box::new(LrtDetector::build(laws, LrtMode::Naive)?),
        DetectorId::PcaLrt => Box::new(PcaLrtDetector::build(&laws.h0, &laws.h1, pca(), LrtMode::Stable)?),
        DetectorId::PcaSvmLinear | DetectorId::PcaSvmRbf => {
            let b = pca();
            Box::new(PcaSvmDetector::train(train, b, cfg.kernel(id, b.p()), &cfg.svm_params())?)
        }
    };
    Ok(Trained { detector, train_time_s: start.elapsed().as_secs_f64() })
}

/// Scores and labels of one evaluation pass.
pub struct Evaluation {
    pub error_rate: f64,
    pub roc: RocResult,
    pub infer_time_s: f64,
}

/// Decides at threshold 0 and builds the ROC. Non-finite scores of lenient
/// detectors rank below every finite score, matching their H0 decision.
pub fn evaluate(detector: &(dyn Detector + Send), test: &CsiDataset) -> Result<Evaluation> {
    let start = Instant::now();
    let raw = detector.score_batch(&test.data)?;
    let decisions = decide_scores(&raw, 0.0, detector.lenient())?;
    let infer_time_s = start.elapsed().as_secs_f64();
    let scores: Vec<f64> = raw
        .into_iter()
        .map(|s| if s.is_nan() { f64::NEG_INFINITY } else { s })
        .collect();
    Ok(Evaluation {
        error_rate: error_rate(&decisions, &test.labels)?,
        roc: roc_auc(&scores, &test.labels)?,
        infer_time_s,
    })
}

struct PointResult {
    records: Vec<SweepRecord>,
    curves: Vec<RocCurve>,
    bound: Option<BoundRow>,
}

/// Trains and evaluates every configured detector at subspace dimension `p`.
fn run_point(cfg: &ExperimentConfig, scenario: &Scenario, snr_db: f64, p: usize, point: u64, with_bound: bool) -> Result<PointResult> {
    let (train, test) = scenario.splits(cfg.per_class, point)?;
    let needs_basis = with_bound || cfg.detectors.iter().any(|d| d.uses_pca());
    let (basis, pca_time) = if needs_basis {
        let start = Instant::now();
        let b = pca_fit(&train, p)?;
        (Some(b), start.elapsed().as_secs_f64())
    } else {
        (None, 0.0)
    };
    let mut records = Vec::new();
    let mut curves = Vec::new();
    for &id in &cfg.detectors {
        let trained = train_detector(id, cfg, &scenario.noisy, &train, basis.as_ref())?;
        let eval = evaluate(trained.detector.as_ref(), &test)?;
        let train_time_s = trained.train_time_s + if id.uses_pca() { pca_time } else { 0.0 };
        records.push(SweepRecord {
            n_dim: cfg.n_dim,
            p_dim: p,
            snr_db,
            detector: id,
            error_rate: eval.error_rate,
            auc: eval.roc.auc,
            train_time_s,
            infer_time_s: eval.infer_time_s,
            seed: point,
            eps: None,
        });
        curves.push(RocCurve { detector: id, snr_db, roc: eval.roc });
    }
    let bound = match (with_bound, &basis) {
        (true, Some(b)) => {
            let r = bound_report(&scenario.noisy, Some(b))?;
            Some(BoundRow {
                n_dim: cfg.n_dim,
                p_dim: p,
                snr_db,
                d_b: r.d_b,
                pe_bound: r.pe_bound,
                lambda1: r.lambda1,
                sensing_snr: r.sensing_snr,
            })
        }
        _ => None,
    };
    Ok(PointResult { records, curves, bound })
}

#[derive(Debug, Clone)]
pub struct ErrorVsP {
    pub records: Vec<SweepRecord>,
    pub bounds: Vec<BoundRow>,
}

/// Error rate of each detector across the P grid at `cfg.snr_db`, with the
/// PCA-domain Bhattacharyya bound at each P.
pub fn run_error_vs_p(cfg: &ExperimentConfig) -> Result<ErrorVsP> {
    cfg.validate_for(Experiment::ErrorVsP)?;
    let scenario = Scenario::new(cfg, cfg.snr_db)?;
    let points = cfg
        .p_grid
        .par_iter()
        .map(|&p| run_point(cfg, &scenario, cfg.snr_db, p, point_seed(cfg.seed, cfg.n_dim, p, cfg.snr_db), true))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ErrorVsP { records: Vec::new(), bounds: Vec::new() };
    for pt in points {
        out.records.extend(pt.records);
        out.bounds.extend(pt.bound);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RocVsSnr {
    pub records: Vec<SweepRecord>,
    pub curves: Vec<RocCurve>,
}

/// Full ROC of each detector at each SNR with P fixed at `cfg.p`.
pub fn run_roc_vs_snr(cfg: &ExperimentConfig) -> Result<RocVsSnr> {
    cfg.validate_for(Experiment::RocVsSnr)?;
    let points = cfg
        .snr_grid
        .par_iter()
        .map(|&snr| {
            let scenario = Scenario::new(cfg, snr)?;
            run_point(cfg, &scenario, snr, cfg.p, point_seed(cfg.seed, cfg.n_dim, cfg.p, snr), false)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = RocVsSnr { records: Vec::new(), curves: Vec::new() };
    for pt in points {
        out.records.extend(pt.records);
        out.curves.extend(pt.curves);
    }
    Ok(out)
}

/// Seed of the single grid point shared by every eps in the perturbation run.
pub fn perturbation_seed(cfg: &ExperimentConfig) -> u64 {
    seed::derive(cfg.seed, &[cfg.n_dim as u64, seed::real_key(cfg.snr_db), PERTURB])
}

/// Test error as the estimated class means and variances are perturbed by a
/// relative error `eps`. LRT detectors are rebuilt from the perturbed
/// estimates; SVM detectors never see them and are trained once.
pub fn run_perturbation(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate_for(Experiment::Perturbation)?;
    let scenario = Scenario::new(cfg, cfg.snr_db)?;
    let point = perturbation_seed(cfg);
    let (train, test) = scenario.splits(cfg.per_class, point)?;
    let est0 = estimate_gaussian_params(&train.class_columns(0))?;
    let est1 = estimate_gaussian_params(&train.class_columns(1))?;

    let mut pca_dims: Vec<usize> = Vec::new();
    for &id in &cfg.detectors {
        match id {
            DetectorId::PcaLrt => pca_dims.extend(&cfg.perturb_p_grid),
            DetectorId::PcaSvmLinear | DetectorId::PcaSvmRbf => pca_dims.push(cfg.p),
            _ => {}
        }
    }
    let full_basis = match pca_dims.iter().max() {
        Some(&p) => Some(pca_fit(&train, p)?),
        None => None,
    };
    let basis_for = |p: usize| -> Result<Option<PcaBasis>> { full_basis.as_ref().map(|b| b.truncate(p)).transpose() };

    let record = |id: DetectorId, p: usize, eps: f64, error: f64, auc: f64, train_s: f64, infer_s: f64| SweepRecord {
        n_dim: cfg.n_dim,
        p_dim: p,
        snr_db: cfg.snr_db,
        detector: id,
        error_rate: error,
        auc,
        train_time_s: train_s,
        infer_time_s: infer_s,
        seed: point,
        eps: Some(eps),
    };

    // SVMs do not depend on eps: evaluate once and repeat the row.
    let mut svm_rows = Vec::new();
    for &id in cfg.detectors.iter().filter(|d| d.is_svm()) {
        let basis = basis_for(cfg.p)?;
        let trained = train_detector(id, cfg, &scenario.noisy, &train, basis.as_ref())?;
        let eval = evaluate(trained.detector.as_ref(), &test)?;
        svm_rows.push((id, eval.error_rate, eval.roc.auc, trained.train_time_s, eval.infer_time_s));
    }

    let rows = cfg
        .eps_grid
        .par_iter()
        .map(|&eps| -> Result<Vec<SweepRecord>> {
            let key = seed::real_key(eps);
            let laws = HypothesisPair::new(
                perturb_params(&est0, eps, seed::derive(point, &[PERTURB, 0, key]))?.to_law()?,
                perturb_params(&est1, eps, seed::derive(point, &[PERTURB, 1, key]))?.to_law()?,
            )?;
            let mut rows = Vec::new();
            for &id in &cfg.detectors {
                match id {
                    DetectorId::FullLrt | DetectorId::FullLrtNaive => {
                        let t = train_detector(id, cfg, &laws, &train, None)?;
                        let e = evaluate(t.detector.as_ref(), &test)?;
                        rows.push(record(id, cfg.n_dim, eps, e.error_rate, e.roc.auc, t.train_time_s, e.infer_time_s));
                    }
                    DetectorId::PcaLrt => {
                        for &p in &cfg.perturb_p_grid {
                            let basis = basis_for(p)?;
                            let t = train_detector(id, cfg, &laws, &train, basis.as_ref())?;
                            let e = evaluate(t.detector.as_ref(), &test)?;
                            rows.push(record(id, p, eps, e.error_rate, e.roc.auc, t.train_time_s, e.infer_time_s));
                        }
                    }
                    DetectorId::PcaSvmLinear | DetectorId::PcaSvmRbf => {
                        let &(_, err, auc, tr, inf) = svm_rows.iter().find(|r| r.0 == id).expect("svm rows cover svm detectors");
                        rows.push(record(id, cfg.p, eps, err, auc, tr, inf));
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub struct TimingVsP {
    pub records: Vec<SweepRecord>,
    pub timings: Vec<TimingRow>,
}

/// Post-training inference time per test-set pass across the P grid. Runs
/// sequentially so timed passes do not compete for cores; every P uses the
/// same test set so Full-LRT rows are directly comparable.
pub fn run_timing_vs_p(cfg: &ExperimentConfig) -> Result<TimingVsP> {
    cfg.validate_for(Experiment::Timing)?;
    let scenario = Scenario::new(cfg, cfg.snr_db)?;
    let point = seed::derive(cfg.seed, &[cfg.n_dim as u64, seed::real_key(cfg.snr_db), TEST]);
    let (train, test) = scenario.splits(cfg.per_class, point)?;
    let max_p = *cfg.p_grid.iter().max().expect("validated nonempty");
    let needs_basis = cfg.detectors.iter().any(|d| d.uses_pca());
    let full_basis = if needs_basis { Some(pca_fit(&train, max_p)?) } else { None };

    // P-independent detectors are trained once.
    let mut fixed = Vec::new();
    for &id in cfg.detectors.iter().filter(|d| !d.uses_pca()) {
        fixed.push((id, train_detector(id, cfg, &scenario.noisy, &train, None)?));
    }

    let mut out = TimingVsP { records: Vec::new(), timings: Vec::new() };
    for &p in &cfg.p_grid {
        let basis = full_basis.as_ref().map(|b| b.truncate(p)).transpose()?;
        for &id in &cfg.detectors {
            let owned;
            let trained = if id.uses_pca() {
                owned = train_detector(id, cfg, &scenario.noisy, &train, basis.as_ref())?;
                &owned
            } else {
                &fixed.iter().find(|(d, _)| *d == id).expect("fixed detectors trained").1
            };
            let eval = evaluate(trained.detector.as_ref(), &test)?;
            let stats = bench_inference(trained.detector.as_ref(), &test.data, cfg.timing_reps)?;
            out.records.push(SweepRecord {
                n_dim: cfg.n_dim,
                p_dim: p,
                snr_db: cfg.snr_db,
                detector: id,
                error_rate: eval.error_rate,
                auc: eval.roc.auc,
                train_time_s: trained.train_time_s,
                infer_time_s: stats.median_s,
                seed: point,
                eps: None,
            });
            out.timings.push(TimingRow { n_dim: cfg.n_dim, p_dim: p, detector: id, stats });
        }
    }
    Ok(out)
}

/// Analytic full-space bound (row with `p = n`) followed by the PCA-domain
/// bound for every P in the grid, each basis fitted on a fresh training split.
pub fn run_bound(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    cfg.validate_for(Experiment::Bound)?;
    let scenario = Scenario::new(cfg, cfg.snr_db)?;
    let row = |p: usize, basis: Option<&PcaBasis>| -> Result<BoundRow> {
        let r = bound_report(&scenario.noisy, basis)?;
        Ok(BoundRow {
            n_dim: cfg.n_dim,
            p_dim: p,
            snr_db: cfg.snr_db,
            d_b: r.d_b,
            pe_bound: r.pe_bound,
            lambda1: r.lambda1,
            sensing_snr: r.sensing_snr,
        })
    };
    let mut rows = vec![row(cfg.n_dim, None)?];
    for &p in &cfg.p_grid {
        let (train, _) = scenario.splits(cfg.per_class, point_seed(cfg.seed, cfg.n_dim, p, cfg.snr_db))?;
        rows.push(row(p, Some(&pca_fit(&train, p)?))?);
    }
    Ok(rows)
}

/// One labelled dataset at `cfg.snr_db`, as written by the `gen` command.
pub fn run_generate(cfg: &ExperimentConfig) -> Result<CsiDataset> {
    cfg.validate_for(Experiment::Generate)?;
    let scenario = Scenario::new(cfg, cfg.snr_db)?;
    let (train, _) = scenario.splits(cfg.per_class, point_seed(cfg.seed, cfg.n_dim, 0, cfg.snr_db))?;
    Ok(train)
}
