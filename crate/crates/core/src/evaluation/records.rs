use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{DetectorId, ExperimentConfig};
use crate::error::Result;

use super::roc::RocResult;
use super::timing::TimingStats;

/// One detector evaluated at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n_dim: usize,
    pub p_dim: usize,
    pub snr_db: f64,
    pub detector: DetectorId,
    pub error_rate: f64,
    pub auc: f64,
    pub train_time_s: f64,
    pub infer_time_s: f64,
    /// Seed the grid point's training and test data were drawn from.
    pub seed: u64,
    /// Relative parameter error, perturbation runs only.
    pub eps: Option<f64>,
}

impl SweepRecord {
    /// Copy with the timing fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        SweepRecord { train_time_s: 0.0, infer_time_s: 0.0, ..self.clone() }
    }
}

/// Bhattacharyya bound in a P-dimensional PCA domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n_dim: usize,
    pub p_dim: usize,
    pub snr_db: f64,
    pub d_b: f64,
    pub pe_bound: f64,
    pub lambda1: f64,
    pub sensing_snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub detector: DetectorId,
    pub snr_db: f64,
    pub roc: RocResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n_dim: usize,
    pub p_dim: usize,
    pub detector: DetectorId,
    pub stats: TimingStats,
}

/// Provenance record written next to every output: the full echoed
/// configuration, seed, versions and the calibrated channel parameters.
pub fn run_manifest(command: &str, cfg: &ExperimentConfig, outputs: &[&str]) -> serde_json::Value {
    serde_json::json!({
        "command": command,
        "seed": cfg.seed,
        "versions": { "commsense": env!("CARGO_PKG_VERSION") },
        "config": cfg,
        "config_toml": cfg.to_toml(),
        "retuned_defaults": cfg.retuned_channel_defaults(),
        "outputs": outputs,
        "complete": true,
    })
}

pub const RECORD_HEADER: &str = "n,p,snr_db,detector,error_rate,auc,train_s,infer_s,seed";

/// Writes the results table. A trailing `eps` column is added when any
/// record carries one.
pub fn write_records<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    let with_eps = records.iter().any(|r| r.eps.is_some());
    writeln!(out, "{RECORD_HEADER}{}", if with_eps { ",eps" } else { "" })?;
    for r in records {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n_dim, r.p_dim, r.snr_db, r.detector, r.error_rate, r.auc, r.train_time_s, r.infer_time_s, r.seed
        )?;
        if with_eps {
            match r.eps {
                Some(e) => write!(out, ",{e}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_bounds<W: Write>(rows: &[BoundRow], mut out: W) -> Result<()> {
    writeln!(out, "n,p,snr_db,d_b,pe_bound,lambda1,sensing_snr")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{},{}", r.n_dim, r.p_dim, r.snr_db, r.d_b, r.pe_bound, r.lambda1, r.sensing_snr)?;
    }
    Ok(())
}

pub fn write_roc_points<W: Write>(curves: &[RocCurve], mut out: W) -> Result<()> {
    writeln!(out, "detector,snr_db,fpr,tpr,threshold")?;
    for c in curves {
        for ((fpr, tpr), t) in c.roc.points.iter().zip(&c.roc.thresholds) {
            writeln!(out, "{},{},{},{},{}", c.detector, c.snr_db, fpr, tpr, t)?;
        }
    }
    Ok(())
}

pub fn write_timings<W: Write>(rows: &[TimingRow], mut out: W) -> Result<()> {
    writeln!(out, "n,p,detector,median_s,p10_s,p90_s,repetitions")?;
    for r in rows {
        let s = &r.stats;
        writeln!(out, "{},{},{},{},{},{},{}", r.n_dim, r.p_dim, r.detector, s.median_s, s.p10_s, s.p90_s, s.repetitions)?;
    }
    Ok(())
}

/// AUC laid out with one row per SNR and one column per detector.
pub fn write_auc_table<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    let mut detectors: Vec<DetectorId> = Vec::new();
    let mut snrs: Vec<f64> = Vec::new();
    for r in records {
        if !detectors.contains(&r.detector) {
            detectors.push(r.detector);
        }
        if !snrs.contains(&r.snr_db) {
            snrs.push(r.snr_db);
        }
    }
    write!(out, "snr_db")?;
    for d in &detectors {
        write!(out, ",{d}")?;
    }
    writeln!(out)?;
    for s in snrs {
        write!(out, "{s}")?;
        for d in &detectors {
            match records.iter().find(|r| r.snr_db == s && r.detector == *d) {
                Some(r) => write!(out, ",{:.3}", r.auc)?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(eps: Option<f64>) -> SweepRecord {
        SweepRecord {
            n_dim: 8,
            p_dim: 2,
            snr_db: -5.0,
            detector: DetectorId::PcaLrt,
            error_rate: 0.25,
            auc: 0.875,
            train_time_s: 0.5,
            infer_time_s: 0.125,
            seed: 9,
            eps,
        }
    }

    #[test]
    fn record_csv_layout() {
        let mut buf = Vec::new();
        write_records(&[record(None)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{RECORD_HEADER}\n8,2,-5,pca-lrt,0.25,0.875,0.5,0.125,9\n"));
        let mut buf = Vec::new();
        write_records(&[record(Some(0.1))], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with(",9,0.1\n"));
    }

    #[test]
    fn auc_table_layout() {
        let mut a = record(None);
        let mut b = record(None);
        b.detector = DetectorId::FullLrt;
        b.auc = 1.0;
        a.snr_db = 0.0;
        let mut buf = Vec::new();
        write_auc_table(&[a, b], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "snr_db,pca-lrt,full-lrt\n0,0.875,\n-5,,1.000\n");
    }
}
