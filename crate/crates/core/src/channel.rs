//! Closed-form complex-Gaussian channel laws for the direct (Tx→Rx) link and
//! the cascaded Tx→Scatterer→Rx path, under both sensing hypotheses.
//!
//! Every link is a single effective Rician tap normalized to unit average
//! power. Its N time samples are independent, so the time-domain law is
//! `CN(μ_g, σ_g² I)` and the frequency-domain law follows from the
//! unnormalized DFT (`F Fᴴ = N I`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical parameters of the Tx/Rx/Scatterer triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Transmit power in watts.
    pub tx_power: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    /// Carrier frequency in hertz.
    pub carrier_freq: f64,
    /// Tx→Rx distance in meters.
    pub dist_tr: f64,
    /// Tx→Scatterer distance in meters.
    pub dist_ts: f64,
    /// Scatterer→Rx distance in meters.
    pub dist_sr: f64,
    /// Radar cross section in square meters.
    pub rcs: f64,
}

impl LinkGeometry {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power", self.tx_power),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("carrier_freq", self.carrier_freq),
            ("dist_tr", self.dist_tr),
            ("dist_ts", self.dist_ts),
            ("dist_sr", self.dist_sr),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.rcs.is_finite() && self.rcs >= 0.0) {
            return Err(Error::domain("rcs", format!("must be finite and >= 0, got {}", self.rcs)));
        }
        Ok(())
    }
}

/// Received amplitude of the direct path from the free-space Friis equation.
pub fn friis_direct_amplitude(geom: &LinkGeometry) -> Result<f64> {
    geom.validate()?;
    let power = geom.tx_power * geom.tx_gain * geom.rx_gain;
    Ok(power.sqrt() * geom.wavelength() / (4.0 * PI * geom.dist_tr))
}

/// Received amplitude of the bistatic path reflected by a scatterer of
/// cross section `rcs`.
pub fn friis_scattered_amplitude(geom: &LinkGeometry) -> Result<f64> {
    geom.validate()?;
    let power = geom.tx_power * geom.tx_gain * geom.rx_gain * geom.rcs;
    Ok(power.sqrt() * geom.wavelength() / ((4.0 * PI).powf(1.5) * geom.dist_ts * geom.dist_sr))
}

/// Amplitude of the scattered path relative to the direct path.
pub fn scatter_to_direct_ratio(geom: &LinkGeometry) -> Result<f64> {
    Ok(friis_scattered_amplitude(geom)? / friis_direct_amplitude(geom)?)
}

/// Rician K-factor of a LOS component of amplitude `amplitude` over diffuse
/// multipath whose real and imaginary parts each have variance `nlos_var`.
pub fn k_factor_from_amplitude(amplitude: f64, nlos_var: f64) -> Result<f64> {
    if !(nlos_var.is_finite() && nlos_var > 0.0) {
        return Err(Error::domain("nlos_var", format!("must be > 0, got {nlos_var}")));
    }
    Ok(amplitude * amplitude / (2.0 * nlos_var))
}

/// Small-scale fading parameters of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFading {
    pub k_factor: f64,
    /// Doppler shift in hertz.
    pub doppler: f64,
    /// LOS propagation delay in seconds.
    pub los_delay: f64,
    /// Initial phase in radians.
    pub phase_offset: f64,
    /// Sampling interval in seconds.
    pub sample_period: f64,
}

impl LinkFading {
    /// Static LOS link with zero Doppler, delay and phase offset.
    pub fn with_k(k_factor: f64) -> Self {
        LinkFading {
            k_factor,
            doppler: 0.0,
            los_delay: 0.0,
            phase_offset: 0.0,
            sample_period: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.k_factor.is_finite() && self.k_factor >= 0.0) {
            return Err(Error::domain("k_factor", format!("must be finite and >= 0, got {}", self.k_factor)));
        }
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(Error::domain("sample_period", format!("must be > 0, got {}", self.sample_period)));
        }
        Ok(())
    }
}

/// Phase of the LOS component at sample `n`.
pub fn los_phase(n: usize, fading: &LinkFading, carrier_freq: f64) -> f64 {
    let t = n as f64 * fading.sample_period;
    -2.0 * PI * carrier_freq * fading.los_delay + 2.0 * PI * fading.doppler * t + fading.phase_offset
}

/// Circularly-symmetric complex Gaussian `CN(mean, iso_var · I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexGaussianVector {
    mean: Vec<Complex64>,
    iso_var: f64,
}

impl ComplexGaussianVector {
    pub fn new(mean: Vec<Complex64>, iso_var: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::domain("mean", "dimension must be >= 1"));
        }
        if !(iso_var.is_finite() && iso_var >= 0.0) {
            return Err(Error::domain("iso_var", format!("must be finite and >= 0, got {iso_var}")));
        }
        Ok(ComplexGaussianVector { mean, iso_var })
    }

    pub fn mean(&self) -> &[Complex64] {
        &self.mean
    }

    pub fn iso_var(&self) -> f64 {
        self.iso_var
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Average per-dimension power `‖μ‖²/N + σ²`.
    pub fn mean_power(&self) -> f64 {
        self.mean.iter().map(|m| m.norm_sqr()).sum::<f64>() / self.dim() as f64 + self.iso_var
    }

    /// Law of `a·x` for a real amplitude `a`.
    pub fn scaled(&self, amplitude: f64) -> Self {
        ComplexGaussianVector {
            mean: self.mean.iter().map(|m| m * amplitude).collect(),
            iso_var: self.iso_var * amplitude * amplitude,
        }
    }

    /// Law of `x + w` with independent `w ~ CN(0, extra · I)`.
    pub fn with_added_variance(&self, extra: f64) -> Result<Self> {
        ComplexGaussianVector::new(self.mean.clone(), self.iso_var + extra)
    }
}

/// Time-domain law of N samples of a unit-power Rician link.
pub fn rician_time_distribution(
    fading: &LinkFading,
    carrier_freq: f64,
    n_dim: usize,
) -> Result<ComplexGaussianVector> {
    fading.validate()?;
    if n_dim == 0 {
        return Err(Error::domain("n_dim", "must be >= 1"));
    }
    let k = fading.k_factor;
    let los_amp = (k / (k + 1.0)).sqrt();
    let mean = (0..n_dim)
        .map(|n| Complex64::from_polar(los_amp, los_phase(n, fading, carrier_freq)))
        .collect();
    ComplexGaussianVector::new(mean, 1.0 / (k + 1.0))
}

/// Frequency-domain law under the unnormalized N-point DFT.
pub fn dft_of_distribution(time_dist: &ComplexGaussianVector) -> ComplexGaussianVector {
    let n = time_dist.dim();
    let mut mean = time_dist.mean.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut mean);
    ComplexGaussianVector { mean, iso_var: n as f64 * time_dist.iso_var }
}

/// First two moments of the elementwise product of two independent
/// frequency-domain laws.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedMoments {
    pub mean: Vec<Complex64>,
    /// Per-subcarrier variance of the product.
    pub elementwise_var: Vec<f64>,
}

impl CascadedMoments {
    /// Gaussian with the matched mean and the subcarrier-averaged variance.
    pub fn isotropic(&self) -> ComplexGaussianVector {
        let var = self.elementwise_var.iter().sum::<f64>() / self.elementwise_var.len() as f64;
        ComplexGaussianVector { mean: self.mean.clone(), iso_var: var }
    }
}

/// For independent `x₁ ~ CN(μ₁, σ₁²)` and `x₂ ~ CN(μ₂, σ₂²)` the product has
/// mean `μ₁μ₂` and variance `σ₁²σ₂² + σ₁²|μ₂|² + σ₂²|μ₁|²`.
pub fn cascaded_moments(ts: &ComplexGaussianVector, sr: &ComplexGaussianVector) -> Result<CascadedMoments> {
    check_dim(ts.dim(), sr.dim())?;
    let (v1, v2) = (ts.iso_var, sr.iso_var);
    let mean = ts.mean.iter().zip(&sr.mean).map(|(a, b)| a * b).collect();
    let elementwise_var = ts
        .mean
        .iter()
        .zip(&sr.mean)
        .map(|(m1, m2)| v1 * v2 + v1 * m2.norm_sqr() + v2 * m1.norm_sqr())
        .collect();
    Ok(CascadedMoments { mean, elementwise_var })
}

/// Moment-matched Gaussian approximation of the cascaded channel.
pub fn cascaded_distribution(ts: &ComplexGaussianVector, sr: &ComplexGaussianVector) -> Result<ComplexGaussianVector> {
    Ok(cascaded_moments(ts, sr)?.isotropic())
}

/// Channel laws under "scatterer absent" (`h0`) and "scatterer present" (`h1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPair {
    pub h0: ComplexGaussianVector,
    pub h1: ComplexGaussianVector,
}

impl HypothesisPair {
    pub fn new(h0: ComplexGaussianVector, h1: ComplexGaussianVector) -> Result<Self> {
        check_dim(h0.dim(), h1.dim())?;
        Ok(HypothesisPair { h0, h1 })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// Both laws observed through independent `CN(0, noise_var · I)` noise.
    pub fn with_noise(&self, noise_var: f64) -> Result<Self> {
        HypothesisPair::new(self.h0.with_added_variance(noise_var)?, self.h1.with_added_variance(noise_var)?)
    }
}

/// `h0` is the direct link alone; `h1` adds the independent cascaded path.
pub fn hypothesis_models(tr: &ComplexGaussianVector, cascaded: &ComplexGaussianVector) -> Result<HypothesisPair> {
    check_dim(tr.dim(), cascaded.dim())?;
    let mean = tr.mean.iter().zip(&cascaded.mean).map(|(a, b)| a + b).collect();
    let h1 = ComplexGaussianVector::new(mean, tr.iso_var + cascaded.iso_var)?;
    HypothesisPair::new(tr.clone(), h1)
}

/// The three links of a sensing scenario plus the relative amplitude of the
/// scattered path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub tr: LinkFading,
    pub ts: LinkFading,
    pub sr: LinkFading,
    pub carrier_freq: f64,
    /// Amplitude multiplier applied to the cascaded path (1 = unit-power links).
    pub scatter_amplitude: f64,
}

/// Frequency-domain channel laws of a scenario, with per-subcarrier
/// diagnostics of the cascaded path.
#[derive(Debug, Clone)]
pub struct ScenarioLaws {
    pub pair: HypothesisPair,
    /// Exact per-subcarrier cascaded variance before isotropic averaging.
    pub cascaded_elementwise_var: Vec<f64>,
}

impl ChannelModel {
    pub fn laws(&self, n_dim: usize) -> Result<ScenarioLaws> {
        if !(self.scatter_amplitude.is_finite() && self.scatter_amplitude >= 0.0) {
            return Err(Error::domain("scatter_amplitude", format!("must be finite and >= 0, got {}", self.scatter_amplitude)));
        }
        let link = |f: &LinkFading| -> Result<ComplexGaussianVector> {
            Ok(dft_of_distribution(&rician_time_distribution(f, self.carrier_freq, n_dim)?))
        };
        let tr = link(&self.tr)?;
        let moments = cascaded_moments(&link(&self.ts)?, &link(&self.sr)?)?;
        let a2 = self.scatter_amplitude * self.scatter_amplitude;
        let cascaded = moments.isotropic().scaled(self.scatter_amplitude);
        Ok(ScenarioLaws {
            pair: hypothesis_models(&tr, &cascaded)?,
            cascaded_elementwise_var: moments.elementwise_var.iter().map(|v| v * a2).collect(),
        })
    }

    pub fn hypotheses(&self, n_dim: usize) -> Result<HypothesisPair> {
        Ok(self.laws(n_dim)?.pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_geometry() -> LinkGeometry {
        LinkGeometry {
            tx_power: 1.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            carrier_freq: SPEED_OF_LIGHT / (4.0 * PI),
            dist_tr: 1.0,
            dist_ts: 1.0,
            dist_sr: 1.0,
            rcs: 1.0,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn direct_amplitude_examples() {
        let g = unit_geometry();
        assert!(close(friis_direct_amplitude(&g).unwrap(), 1.0, 1e-12));
        assert!(close(friis_direct_amplitude(&LinkGeometry { dist_tr: 2.0, ..g }).unwrap(), 0.5, 1e-12));
        assert!(close(friis_direct_amplitude(&LinkGeometry { tx_power: 4.0, ..g }).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn scattered_amplitude_examples() {
        let g = LinkGeometry { carrier_freq: SPEED_OF_LIGHT / (4.0 * PI).powf(1.5), ..unit_geometry() };
        assert!(close(friis_scattered_amplitude(&g).unwrap(), 1.0, 1e-12));
        assert!(close(friis_scattered_amplitude(&LinkGeometry { rcs: 4.0, ..g }).unwrap(), 2.0, 1e-12));
        assert!(close(friis_scattered_amplitude(&LinkGeometry { dist_ts: 2.0, ..g }).unwrap(), 0.5, 1e-12));
    }

    #[test]
    fn friis_rejects_bad_geometry() {
        let g = unit_geometry();
        assert!(friis_direct_amplitude(&LinkGeometry { dist_tr: 0.0, ..g }).is_err());
        assert!(friis_direct_amplitude(&LinkGeometry { tx_power: -1.0, ..g }).is_err());
        assert!(friis_scattered_amplitude(&LinkGeometry { rcs: -0.5, ..g }).is_err());
    }

    #[test]
    fn amplitudes_scale_inversely_with_distance() {
        let g = LinkGeometry { carrier_freq: 2.4e9, dist_tr: 37.0, dist_ts: 11.0, dist_sr: 5.0, rcs: 0.3, ..unit_geometry() };
        for s in [0.5, 2.0, 7.25] {
            let d = friis_direct_amplitude(&LinkGeometry { dist_tr: g.dist_tr * s, ..g }).unwrap();
            assert!(close(d * s, friis_direct_amplitude(&g).unwrap(), 1e-12));
            let sc = friis_scattered_amplitude(&LinkGeometry { dist_ts: g.dist_ts * s, dist_sr: g.dist_sr * s, ..g }).unwrap();
            assert!(close(sc * s * s, friis_scattered_amplitude(&g).unwrap(), 1e-12));
        }
    }

    #[test]
    fn k_factor_helper() {
        assert!(close(k_factor_from_amplitude(2.0, 0.5).unwrap(), 4.0, 1e-15));
        assert!(k_factor_from_amplitude(1.0, 0.0).is_err());
    }

    #[test]
    fn los_phase_examples() {
        let f = LinkFading::with_k(1.0);
        for n in [0, 1, 17] {
            assert_eq!(los_phase(n, &f, 3.5e9), 0.0);
        }
        let n_dim = 64;
        let f = LinkFading { doppler: 1.0 / (n_dim as f64 * 1e-6), ..f };
        for n in [0usize, 5, 63] {
            assert!(close(los_phase(n, &f, 3.5e9), 2.0 * PI * n as f64 / n_dim as f64, 1e-12));
        }
        let fc = 2.0e9;
        let f = LinkFading { los_delay: 0.5 / fc, ..LinkFading::with_k(1.0) };
        for n in [0, 9] {
            assert!(close(los_phase(n, &f, fc), -PI, 1e-12));
        }
    }

    #[test]
    fn rician_time_examples() {
        let d = rician_time_distribution(&LinkFading::with_k(0.0), 1e9, 8).unwrap();
        assert!(d.mean().iter().all(|m| *m == Complex64::new(0.0, 0.0)));
        assert_eq!(d.iso_var(), 1.0);

        let d = rician_time_distribution(&LinkFading::with_k(1.0), 1e9, 8).unwrap();
        for m in d.mean() {
            assert!(close(m.re, 0.5f64.sqrt(), 1e-12) && m.im == 0.0);
        }
        assert!(close(d.iso_var(), 0.5, 1e-15));

        let d = rician_time_distribution(&LinkFading::with_k(1e6), 1e9, 8).unwrap();
        assert!((d.iso_var() - 1e-6).abs() < 1e-11);
        assert!(d.mean().iter().all(|m| (m.norm() - 1.0).abs() < 1e-6));

        assert!(rician_time_distribution(&LinkFading::with_k(-1.0), 1e9, 8).is_err());
        assert!(rician_time_distribution(&LinkFading::with_k(1.0), 1e9, 0).is_err());
    }

    #[test]
    fn rician_unit_power_per_sample() {
        for k in [0.0, 0.01, 0.7, 3.0, 250.0] {
            let f = LinkFading { k_factor: k, doppler: 310.0, los_delay: 1.3e-8, phase_offset: 0.4, sample_period: 1e-5 };
            let d = rician_time_distribution(&f, 2.4e9, 32).unwrap();
            for m in d.mean() {
                assert!(close(m.norm_sqr() + d.iso_var(), 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn dft_examples() {
        let d = dft_of_distribution(&rician_time_distribution(&LinkFading::with_k(0.0), 1e9, 256).unwrap());
        assert!(d.mean().iter().all(|m| m.norm() < 1e-12));
        assert_eq!(d.iso_var(), 256.0);

        let c = Complex64::new(0.3, -1.1);
        let d = dft_of_distribution(&ComplexGaussianVector::new(vec![c; 16], 0.25).unwrap());
        assert!((d.mean()[0] - c * 16.0).norm() < 1e-12);
        assert!(d.mean()[1..].iter().all(|m| m.norm() < 1e-12));
        assert_eq!(d.iso_var(), 4.0);
    }

    #[test]
    fn cascaded_scalar_examples() {
        let zero = ComplexGaussianVector::new(vec![Complex64::new(0.0, 0.0)], 1.0).unwrap();
        let c = cascaded_distribution(&zero, &zero).unwrap();
        assert_eq!(c.mean()[0], Complex64::new(0.0, 0.0));
        assert_eq!(c.iso_var(), 1.0);

        let one = ComplexGaussianVector::new(vec![Complex64::new(1.0, 0.0)], 1.0).unwrap();
        let c = cascaded_distribution(&one, &one).unwrap();
        assert_eq!(c.mean()[0], Complex64::new(1.0, 0.0));
        assert_eq!(c.iso_var(), 3.0);

        let two = ComplexGaussianVector::new(vec![Complex64::new(1.0, 0.0); 2], 1.0).unwrap();
        assert!(matches!(cascaded_distribution(&one, &two), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cascaded_isotropic_is_average_of_elementwise() {
        let a = ComplexGaussianVector::new(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)], 0.5).unwrap();
        let b = ComplexGaussianVector::new(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 3.0)], 0.25).unwrap();
        let m = cascaded_moments(&a, &b).unwrap();
        // 0.125 + 0.5*2 + 0.25*4 ; 0.125 + 0.5*9 + 0
        assert!(close(m.elementwise_var[0], 2.125, 1e-15));
        assert!(close(m.elementwise_var[1], 4.625, 1e-15));
        assert!(close(m.isotropic().iso_var(), 3.375, 1e-15));
        assert_eq!(m.mean[0], Complex64::new(2.0, 2.0));
    }

    #[test]
    fn hypothesis_examples() {
        let tr = ComplexGaussianVector::new(vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)], 2.0).unwrap();
        let silent = ComplexGaussianVector::new(vec![Complex64::new(0.0, 0.0); 2], 0.0).unwrap();
        let pair = hypothesis_models(&tr, &silent).unwrap();
        assert_eq!(pair.h0, pair.h1);
        assert_eq!(pair.h0, tr);

        let casc = ComplexGaussianVector::new(vec![Complex64::new(0.25, 1.0), Complex64::new(-3.0, 0.5)], 3.0).unwrap();
        let pair = hypothesis_models(&tr, &casc).unwrap();
        assert_eq!(pair.h1.iso_var(), 5.0);
        for k in 0..2 {
            assert!((pair.h1.mean()[k] - pair.h0.mean()[k] - casc.mean()[k]).norm() < 1e-15);
        }
        let short = ComplexGaussianVector::new(vec![Complex64::new(0.0, 0.0)], 1.0).unwrap();
        assert!(hypothesis_models(&tr, &short).is_err());
    }

    #[test]
    fn scenario_reference_power_is_n() {
        let model = ChannelModel {
            tr: LinkFading::with_k(5.0),
            ts: LinkFading::with_k(0.01),
            sr: LinkFading::with_k(0.01),
            carrier_freq: 3.5e9,
            scatter_amplitude: 0.066,
        };
        let laws = model.laws(64).unwrap();
        assert!(close(laws.pair.h0.mean_power(), 64.0, 1e-12));
        let avg = laws.cascaded_elementwise_var.iter().sum::<f64>() / 64.0;
        assert!(close(laws.pair.h1.iso_var() - laws.pair.h0.iso_var(), avg, 1e-12));
    }
}
