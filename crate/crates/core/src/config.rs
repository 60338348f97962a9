//! Experiment configuration: a flat key-value TOML table with documented
//! defaults and per-key overrides.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{scatter_to_direct_ratio, ChannelModel, LinkFading, LinkGeometry};
use crate::detectors::{Kernel, SvmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorId {
    FullLrt,
    FullLrtNaive,
    PcaLrt,
    PcaSvmLinear,
    PcaSvmRbf,
}

impl DetectorId {
    pub const ALL: [DetectorId; 5] = [
        DetectorId::FullLrt,
        DetectorId::FullLrtNaive,
        DetectorId::PcaLrt,
        DetectorId::PcaSvmLinear,
        DetectorId::PcaSvmRbf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorId::FullLrt => "full-lrt",
            DetectorId::FullLrtNaive => "full-lrt-naive",
            DetectorId::PcaLrt => "pca-lrt",
            DetectorId::PcaSvmLinear => "pca-svm-linear",
            DetectorId::PcaSvmRbf => "pca-svm-rbf",
        }
    }

    pub fn uses_pca(self) -> bool {
        !matches!(self, DetectorId::FullLrt | DetectorId::FullLrtNaive)
    }

    pub fn is_svm(self) -> bool {
        matches!(self, DetectorId::PcaSvmLinear | DetectorId::PcaSvmRbf)
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorId::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::config("detectors", format!("unknown detector `{s}`")))
    }
}

/// Reference K-factors for the direct and scatterer links. The shipped
/// defaults lower the scatterer-link K-factors; see the README.
pub const REFERENCE_K_TR: f64 = 5.0;
pub const REFERENCE_K_SCATTER: f64 = 3.0;

/// A channel parameter whose value was chosen by calibration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetunedParam {
    pub key: &'static str,
    pub reference: Option<f64>,
    pub value: f64,
}

/// Which experiment a configuration is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Generate,
    ErrorVsP,
    RocVsSnr,
    Perturbation,
    Timing,
    Bound,
}

/// All experiment knobs. Every field has a default, so an empty file is a
/// valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of subcarriers N.
    pub n_dim: usize,
    /// Columns per hypothesis in each of the training and test splits.
    pub per_class: usize,
    /// SNR for single-SNR experiments (sweep-p, perturb, bench, bound).
    pub snr_db: f64,
    pub snr_grid: Vec<f64>,
    /// Subspace dimension for single-P experiments (sweep-snr, gen scree).
    pub p: usize,
    pub p_grid: Vec<usize>,
    /// Subspace dimensions of the PCA+LRT detectors in the perturbation run.
    pub perturb_p_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub detectors: Vec<DetectorId>,

    pub k_tr: f64,
    pub k_ts: f64,
    pub k_sr: f64,
    pub doppler_hz: f64,
    pub los_delay_s: f64,
    pub phase_offset_rad: f64,
    pub sample_period_s: f64,
    pub carrier_freq_hz: f64,
    /// Power of the scattered path relative to unit-power links, in dB.
    /// Ignored when a geometry block is given.
    pub scatter_gain_db: f64,
    /// Optional bistatic geometry; when set the scattered amplitude follows
    /// the Friis ratio instead of `scatter_gain_db`.
    pub geometry: Option<LinkGeometry>,

    pub svm_c: f64,
    /// RBF width; unset means `1/(2P)`.
    pub svm_gamma: Option<f64>,
    pub svm_tol: f64,

    pub timing_reps: usize,
    pub seed: u64,
    pub output_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_dim: 256,
            per_class: 500,
            snr_db: 5.0,
            snr_grid: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
            p: 20,
            p_grid: vec![1, 2, 5, 10, 15, 20, 30, 40],
            perturb_p_grid: vec![5, 10, 20],
            eps_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            detectors: vec![DetectorId::FullLrt, DetectorId::PcaLrt, DetectorId::PcaSvmLinear, DetectorId::PcaSvmRbf],
            k_tr: 5.0,
            k_ts: 0.01,
            k_sr: 0.01,
            doppler_hz: 0.0,
            los_delay_s: 0.0,
            phase_offset_rad: 0.0,
            sample_period_s: 1e-6,
            carrier_freq_hz: 2.4e9,
            scatter_gain_db: -23.6,
            geometry: None,
            svm_c: 1.0,
            svm_gamma: None,
            svm_tol: 1e-4,
            timing_reps: 5,
            seed: 42,
            output_path: PathBuf::from("results"),
        }
    }
}

fn parse_value(key: &str, raw: &str) -> Result<toml::Value> {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => Ok(t.remove("v").expect("parsed key present")),
        // Bare words such as `results/run1` or `full-lrt` are taken as strings.
        Err(_) if !raw.trim().is_empty() => Ok(toml::Value::String(raw.trim().to_string())),
        Err(e) => Err(Error::config(key, format!("cannot parse value `{raw}`: {e}"))),
    }
}

/// Inserts `value` at a dotted key such as `geometry.rcs`.
fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::config(key, "empty key"))?;
    let mut cur = table;
    for part in parts {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
    }
    // A single detector name stands for a one-element list.
    let value = match (last, value) {
        ("detectors", toml::Value::String(s)) => {
            toml::Value::Array(s.split(',').map(|d| toml::Value::String(d.trim().to_string())).collect())
        }
        (_, v) => v,
    };
    cur.insert(last.to_string(), value);
    Ok(())
}

fn toml_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    // serde reports unknown keys as "unknown field `name`, expected ...".
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
        .unwrap_or("config")
        .to_string();
    Error::config(field, msg)
}

impl ExperimentConfig {
    /// Parses TOML text, then applies `key=value` overrides in order.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(toml_error)?;
        for (key, raw) in overrides {
            set_path(&mut table, key, parse_value(key, raw)?)?;
        }
        let cfg: ExperimentConfig = table.try_into().map_err(toml_error)?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Reads `path` (if given) and applies overrides. The result is not yet
    /// validated for a specific experiment.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?,
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        let link = |k: f64| LinkFading {
            k_factor: k,
            doppler: self.doppler_hz,
            los_delay: self.los_delay_s,
            phase_offset: self.phase_offset_rad,
            sample_period: self.sample_period_s,
        };
        let scatter_amplitude = match &self.geometry {
            Some(g) => scatter_to_direct_ratio(g)?,
            None => 10f64.powf(self.scatter_gain_db / 20.0),
        };
        Ok(ChannelModel {
            tr: link(self.k_tr),
            ts: link(self.k_ts),
            sr: link(self.k_sr),
            carrier_freq: self.carrier_freq_hz,
            scatter_amplitude,
        })
    }

    /// Channel parameters set away from their reference value, plus the
    /// scattered-path gain, which has no reference value and is always a
    /// calibrated choice unless a geometry block fixes it.
    pub fn retuned_channel_defaults(&self) -> Vec<RetunedParam> {
        let mut out: Vec<RetunedParam> = [("k_tr", REFERENCE_K_TR, self.k_tr), ("k_ts", REFERENCE_K_SCATTER, self.k_ts), ("k_sr", REFERENCE_K_SCATTER, self.k_sr)]
            .into_iter()
            .filter(|(_, reference, value)| reference != value)
            .map(|(key, reference, value)| RetunedParam { key, reference: Some(reference), value })
            .collect();
        if self.geometry.is_none() {
            out.push(RetunedParam { key: "scatter_gain_db", reference: None, value: self.scatter_gain_db });
        }
        out
    }

    pub fn svm_params(&self) -> SvmParams {
        SvmParams { c: self.svm_c, tol: self.svm_tol, ..SvmParams::default() }
    }

    pub fn kernel(&self, id: DetectorId, p: usize) -> Kernel {
        match id {
            DetectorId::PcaSvmRbf => Kernel::Rbf { gamma: self.svm_gamma.unwrap_or(1.0 / (2.0 * p as f64)) },
            _ => Kernel::Linear,
        }
    }

    /// Checks every field the experiment reads, naming the first offending one.
    pub fn validate_for(&self, exp: Experiment) -> Result<()> {
        use Experiment::*;
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite and > 0, got {v}")))
            }
        };
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite, got {v}")))
            }
        };
        if self.n_dim == 0 {
            return Err(Error::config("n_dim", "must be >= 1"));
        }
        if self.per_class < 2 {
            return Err(Error::config("per_class", format!("must be >= 2, got {}", self.per_class)));
        }
        for (field, k) in [("k_tr", self.k_tr), ("k_ts", self.k_ts), ("k_sr", self.k_sr)] {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::config(field, format!("must be finite and >= 0, got {k}")));
            }
        }
        finite("doppler_hz", self.doppler_hz)?;
        finite("los_delay_s", self.los_delay_s)?;
        finite("phase_offset_rad", self.phase_offset_rad)?;
        finite("scatter_gain_db", self.scatter_gain_db)?;
        positive("sample_period_s", self.sample_period_s)?;
        positive("carrier_freq_hz", self.carrier_freq_hz)?;
        if let Some(g) = &self.geometry {
            scatter_to_direct_ratio(g).map_err(|e| Error::config("geometry", e.to_string()))?;
        }
        finite("snr_db", self.snr_db)?;

        // PCA is fitted on the 2M training columns.
        let max_p = self.n_dim.min(2 * self.per_class);
        let check_p = |field: &str, p: usize| {
            if p == 0 || p > max_p {
                Err(Error::config(field, format!("value {p} outside 1..={max_p} (n_dim = {}, 2·per_class = {})", self.n_dim, 2 * self.per_class)))
            } else {
                Ok(())
            }
        };
        let nonempty = |field: &str, len: usize| {
            if len == 0 {
                Err(Error::config(field, "must not be empty"))
            } else {
                Ok(())
            }
        };

        let uses_detectors = matches!(exp, ErrorVsP | RocVsSnr | Perturbation | Timing);
        if uses_detectors {
            nonempty("detectors", self.detectors.len())?;
            let mut seen = HashSet::new();
            for d in &self.detectors {
                if !seen.insert(d) {
                    return Err(Error::config("detectors", format!("`{d}` listed twice")));
                }
            }
            positive("svm_c", self.svm_c)?;
            positive("svm_tol", self.svm_tol)?;
            if let Some(g) = self.svm_gamma {
                positive("svm_gamma", g)?;
            }
        }
        match exp {
            Generate => {}
            ErrorVsP | Timing | Bound => {
                nonempty("p_grid", self.p_grid.len())?;
                for &p in &self.p_grid {
                    check_p("p_grid", p)?;
                }
            }
            RocVsSnr => {
                check_p("p", self.p)?;
                nonempty("snr_grid", self.snr_grid.len())?;
                for &s in &self.snr_grid {
                    finite("snr_grid", s)?;
                }
            }
            Perturbation => {
                check_p("p", self.p)?;
                nonempty("eps_grid", self.eps_grid.len())?;
                for &e in &self.eps_grid {
                    if !(0.0..=0.3).contains(&e) {
                        return Err(Error::config("eps_grid", format!("value {e} outside [0, 0.3]")));
                    }
                }
                if self.detectors.contains(&DetectorId::PcaLrt) {
                    nonempty("perturb_p_grid", self.perturb_p_grid.len())?;
                    for &p in &self.perturb_p_grid {
                        check_p("perturb_p_grid", p)?;
                    }
                }
            }
        }
        if exp == Timing && self.timing_reps < 3 {
            return Err(Error::config("timing_reps", format!("must be >= 3, got {}", self.timing_reps)));
        }
        Ok(())
    }
}
