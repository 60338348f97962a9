//! Per-test-set inference cost of the detectors at N = 256 and N = 1024.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use commsense::config::{DetectorId, ExperimentConfig};
use commsense::evaluation::{point_seed, train_detector, Scenario};
use commsense::subspace::pca_fit;

const DETECTORS: [DetectorId; 4] = [DetectorId::FullLrt, DetectorId::PcaLrt, DetectorId::PcaSvmLinear, DetectorId::PcaSvmRbf];

fn inference(c: &mut Criterion) {
    let mut group = c.benchmark_group("inference");
    group.sample_size(10);
    for n in [256, 1024] {
        let cfg = ExperimentConfig { n_dim: n, per_class: 250, p: 20, ..ExperimentConfig::default() };
        let scenario = Scenario::new(&cfg, cfg.snr_db).unwrap();
        let (train, test) = scenario.splits(cfg.per_class, point_seed(cfg.seed, n, cfg.p, cfg.snr_db)).unwrap();
        let basis = pca_fit(&train, cfg.p).unwrap();
        for id in DETECTORS {
            let trained = train_detector(id, &cfg, &scenario.noisy, &train, Some(&basis)).unwrap();
            group.bench_with_input(BenchmarkId::new(id.as_str(), n), &test.data, |b, data| {
                b.iter(|| trained.detector.decide_batch(black_box(data), 0.0).unwrap())
            });
        }
    }
    group.finish();
}

fn pca(c: &mut Criterion) {
    let mut group = c.benchmark_group("pca_fit");
    group.sample_size(10);
    let cfg = ExperimentConfig { n_dim: 256, per_class: 250, ..ExperimentConfig::default() };
    let scenario = Scenario::new(&cfg, cfg.snr_db).unwrap();
    let (train, _) = scenario.splits(cfg.per_class, 1).unwrap();
    for p in [5, 20, 40] {
        group.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, &p| b.iter(|| pca_fit(black_box(&train), p).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, inference, pca);
criterion_main!(benches);
