use std::f64::consts::PI;

use commsense::channel::{
    cascaded_moments, dft_of_distribution, hypothesis_models, los_phase, rician_time_distribution, ComplexGaussianVector,
    LinkFading,
};
use commsense::dataset::{sample_csi, CsiMatrix};
use commsense::Complex64;
use proptest::prelude::*;

fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn column_moments(x: &CsiMatrix) -> (Vec<Complex64>, Vec<f64>) {
    let m = x.ncols() as f64;
    let mean: Vec<Complex64> = x.row_iter().map(|r| r.sum() / m).collect();
    let var = x
        .row_iter()
        .zip(&mean)
        .map(|(r, mu)| r.iter().map(|v| (v - mu).norm_sqr()).sum::<f64>() / (m - 1.0))
        .collect();
    (mean, var)
}

fn doppler_link(k: f64) -> LinkFading {
    LinkFading { k_factor: k, doppler: 37_500.0, los_delay: 3e-9, phase_offset: 0.4, sample_period: 1e-6 }
}

#[test]
fn dft_law_matches_monte_carlo_transform() {
    let n = 8;
    let time = rician_time_distribution(&doppler_link(2.0), 2.4e9, n).unwrap();
    let freq = dft_of_distribution(&time);
    let draws = 40_000;
    let x = sample_csi(&time, draws, 5);
    let transformed = CsiMatrix::from_fn(n, draws, |_, _| Complex64::new(0.0, 0.0));
    let mut transformed = transformed;
    for j in 0..draws {
        let col: Vec<Complex64> = x.column(j).iter().copied().collect();
        for (i, v) in naive_dft(&col).into_iter().enumerate() {
            transformed[(i, j)] = v;
        }
    }
    let (mean, var) = column_moments(&transformed);
    let se_mean = (freq.iso_var() / draws as f64).sqrt();
    for k in 0..n {
        assert!((mean[k] - freq.mean()[k]).norm() < 5.0 * se_mean, "bin {k}: {} vs {}", mean[k], freq.mean()[k]);
        assert!((var[k] / freq.iso_var() - 1.0).abs() < 0.03, "bin {k}: {} vs {}", var[k], freq.iso_var());
    }
}

#[test]
fn cascaded_moments_match_monte_carlo_per_subcarrier() {
    let n = 4;
    let ts = dft_of_distribution(&rician_time_distribution(&doppler_link(3.0), 2.4e9, n).unwrap());
    let sr = dft_of_distribution(&rician_time_distribution(&doppler_link(1.0), 2.4e9, n).unwrap());
    let mom = cascaded_moments(&ts, &sr).unwrap();
    let draws = 200_000;
    let a = sample_csi(&ts, draws, 1);
    let b = sample_csi(&sr, draws, 2);
    let prod = a.component_mul(&b);
    let (mean, var) = column_moments(&prod);
    for k in 0..n {
        let se = (mom.elementwise_var[k] / draws as f64).sqrt();
        assert!((mean[k] - mom.mean[k]).norm() < 5.0 * se, "bin {k}");
        assert!((var[k] / mom.elementwise_var[k] - 1.0).abs() < 0.03, "bin {k}: {} vs {}", var[k], mom.elementwise_var[k]);
    }
}

#[test]
fn static_link_concentrates_los_in_dc_bin() {
    let n = 16;
    let k = 4.0;
    let freq = dft_of_distribution(&rician_time_distribution(&LinkFading::with_k(k), 2.4e9, n).unwrap());
    let los = (k / (k + 1.0)).sqrt() * n as f64;
    assert!((freq.mean()[0].norm() - los).abs() < 1e-9);
    assert!(freq.mean()[1..].iter().all(|m| m.norm() < 1e-9));
    assert!((freq.iso_var() - n as f64 / (k + 1.0)).abs() < 1e-12);
}

fn law_strategy(n: usize) -> impl Strategy<Value = ComplexGaussianVector> {
    (prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), n), 0.0..4.0f64)
        .prop_map(|(m, v)| ComplexGaussianVector::new(m.into_iter().map(|(r, i)| Complex64::new(r, i)).collect(), v).unwrap())
}

proptest! {
    #[test]
    fn hypotheses_add_means_and_variances(tr in law_strategy(6), cas in law_strategy(6)) {
        let pair = hypothesis_models(&tr, &cas).unwrap();
        prop_assert_eq!(&pair.h0, &tr);
        prop_assert!((pair.h1.iso_var() - tr.iso_var() - cas.iso_var()).abs() < 1e-12);
        for k in 0..6 {
            prop_assert!((pair.h1.mean()[k] - tr.mean()[k] - cas.mean()[k]).norm() < 1e-12);
        }
        prop_assert!(pair.h1.iso_var() >= pair.h0.iso_var());
    }

    #[test]
    fn dft_preserves_energy(law in law_strategy(8)) {
        let f = dft_of_distribution(&law);
        let n = 8.0;
        // Parseval with the unnormalized transform.
        let time_energy: f64 = law.mean().iter().map(|m| m.norm_sqr()).sum();
        let freq_energy: f64 = f.mean().iter().map(|m| m.norm_sqr()).sum();
        prop_assert!((freq_energy - n * time_energy).abs() < 1e-9 * (1.0 + freq_energy));
        prop_assert!((f.iso_var() - n * law.iso_var()).abs() < 1e-12);
    }

    #[test]
    fn cascaded_variance_is_nonnegative_and_symmetric(a in law_strategy(5), b in law_strategy(5)) {
        let ab = cascaded_moments(&a, &b).unwrap();
        let ba = cascaded_moments(&b, &a).unwrap();
        for k in 0..5 {
            prop_assert!(ab.elementwise_var[k] >= 0.0);
            prop_assert!((ab.elementwise_var[k] - ba.elementwise_var[k]).abs() < 1e-12 * (1.0 + ab.elementwise_var[k]));
            prop_assert!((ab.mean[k] - ba.mean[k]).norm() < 1e-12 * (1.0 + ab.mean[k].norm()));
        }
    }

    #[test]
    fn los_phase_advances_linearly(n in 0usize..1000, fd in -1e4..1e4f64, tau in 0.0..1e-6f64, off in -3.0..3.0f64) {
        let f = LinkFading { k_factor: 1.0, doppler: fd, los_delay: tau, phase_offset: off, sample_period: 1e-6 };
        let step = los_phase(n + 1, &f, 2.4e9) - los_phase(n, &f, 2.4e9);
        prop_assert!((step - 2.0 * PI * fd * 1e-6).abs() < 1e-9);
    }

    #[test]
    fn rician_links_have_unit_power(k in 0.0..50.0f64, n in 1usize..64) {
        let law = rician_time_distribution(&LinkFading::with_k(k), 2.4e9, n).unwrap();
        prop_assert!((law.mean_power() - 1.0).abs() < 1e-12);
    }
}
