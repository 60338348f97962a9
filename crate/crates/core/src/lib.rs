//! Simulation and detection toolkit for passive scatterer sensing on OFDM
//! channel state information.
//!
//! The crate builds complex Gaussian channel laws for "scatterer absent" (H0)
//! and "present" (H1) from a three-link Rician model, samples noisy CSI
//! datasets, and compares likelihood-ratio and SVM detectors in the full
//! space and in a PCA subspace.

pub mod channel;
pub mod config;
pub mod dataset;
pub mod detectors;
pub mod error;
pub mod evaluation;
pub mod seed;
pub mod subspace;

pub use channel::{ChannelModel, ComplexGaussianVector, HypothesisPair, LinkFading, LinkGeometry};
pub use config::{DetectorId, Experiment, ExperimentConfig};
pub use dataset::{CsiDataset, CsiMatrix, NoiseConfig};
pub use detectors::{Decision, Detector, Hypothesis, Kernel, LrtDetector, LrtMode, SvmModel, SvmParams};
pub use error::{Error, Result};
pub use evaluation::{RocResult, SweepRecord, TimingStats};
pub use num_complex::Complex64;
pub use subspace::PcaBasis;
