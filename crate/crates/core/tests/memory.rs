use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use stylized_facts::Error;
use stylized_facts::memory::{acf, acf_direct, acf_fft, fit_acf_powerlaw, jackknife_sigma};
use stylized_facts::synth::{generate, Model, SyntheticSpec};

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    generate(&SyntheticSpec::new(Model::Gaussian, n, seed)).unwrap().returns
}

fn abs(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.abs()).collect()
}

#[test]
fn white_noise_stays_in_band_over_ten_seeds() {
    let n = 1_000_000;
    let band = 4.0 / (n as f64).sqrt();
    for seed in 0..10 {
        let a = acf(&gaussian(n, seed), 1000).unwrap();
        assert_eq!(a.values[0], 1.0);
        let frac = a.band_fraction(1..=1000, band);
        assert!(frac >= 0.99, "seed {seed}: {frac}");
    }
}

#[test]
fn ar1_matches_analytic_decay() {
    let mut rng = ChaCha20Rng::seed_from_u64(40);
    let n = 1_000_000;
    let mut x = Vec::with_capacity(n);
    let mut prev = 0.0;
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        prev = 0.9 * prev + e;
        x.push(prev);
    }
    let a = acf(&x, 20).unwrap();
    for t in 0..=20 {
        let want = 0.9f64.powi(t as i32);
        assert!((a.values[t] - want).abs() < 0.02, "lag {t}: {} vs {want}", a.values[t]);
    }
}

#[test]
fn direct_and_fft_routes_agree() {
    let x = abs(&generate(&SyntheticSpec::new(Model::reference_garch(), 200_000, 41)).unwrap().returns);
    let d = acf_direct(&x, 300).unwrap();
    let f = acf_fft(&x, 300).unwrap();
    for t in 0..=300 {
        assert!((d.values[t] - f.values[t]).abs() < 1e-10, "lag {t}");
    }
}

#[test]
fn jackknife_matches_bartlett_scale_for_white_noise() {
    let n = 1_000_000;
    let x = gaussian(n, 42);
    let s = jackknife_sigma(&x, 100, 50).unwrap();
    let bartlett = 1.0 / (n as f64).sqrt();
    assert!(s > bartlett / 2.0 && s < bartlett * 2.0, "sigma {s} vs {bartlett}");
}

#[test]
fn jackknife_is_deterministic_and_non_negative_on_garch() {
    let r = generate(&SyntheticSpec::new(Model::reference_garch(), 1_000_000, 43)).unwrap().returns;
    let x = abs(&r);
    for lag in [100, 1000] {
        let a = jackknife_sigma(&x, lag, 50).unwrap();
        let b = jackknife_sigma(&x, lag, 50).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a >= 0.0 && a.is_finite());
    }
}

/// At n = 1e6 the |r| ACF of this GARCH (decaying like 0.99^t) meets the
/// noise floor somewhere past lag ~390 for about half of all seeds, so
/// positivity is asserted over [3, 300] and the [3, 500] fit may instead
/// report a non-positive lag.
#[test]
fn garch_absolute_returns_decay_with_negative_exponent() {
    for seed in 0..10 {
        let r = generate(&SyntheticSpec::new(Model::reference_garch(), 1_000_000, 200 + seed)).unwrap().returns;
        let a = acf(&abs(&r), 500).unwrap();
        assert!(a.values[3..=300].iter().all(|&v| v > 0.0), "seed {seed}");
        assert!(a.values[3] > a.values[300]);
        let fit = fit_acf_powerlaw(&a, (3, 300)).unwrap();
        assert!(fit.exponent < 0.0, "seed {seed}: exponent {}", fit.exponent);
        match fit_acf_powerlaw(&a, (3, 500)) {
            Ok(fit) => assert!(fit.exponent < 0.0),
            Err(Error::AcfNotPositive { lag }) => assert!(lag > 300),
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}

#[test]
fn garch_absolute_returns_leave_white_noise_band() {
    let r = generate(&SyntheticSpec::new(Model::reference_garch(), 1_000_000, 45)).unwrap().returns;
    let std = stylized_facts::returns::standardize(&stylized_facts::ReturnSeries::from_values(r, 0, 60)).unwrap();
    let a = acf(&abs(&std.values), 100).unwrap();
    let band = 4.0 / 1000.0;
    assert!(a.values[1..=100].iter().all(|&v| v > band));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_invariance(
        x in prop::collection::vec(-100.0f64..100.0, 50..400),
        a in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0],
        b in -1e3f64..1e3,
    ) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1.0));
        let lag = 40.min(x.len() - 1);
        let base = acf(&x, lag).unwrap();
        let moved = acf(&x.iter().map(|v| a * v + b).collect::<Vec<_>>(), lag).unwrap();
        prop_assert_eq!(moved.values[0], 1.0);
        for (p, q) in base.values.iter().zip(&moved.values) {
            prop_assert!((p - q).abs() < 1e-9);
            prop_assert!(p.abs() <= 1.0);
        }
    }
}
