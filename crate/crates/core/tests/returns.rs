use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use stylized_facts::ingest::BarSeries;
use stylized_facts::returns::{log_returns, standardize, ReturnSeries};

fn sample_moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn million_gaussian_draws_standardize_exactly() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let d = Normal::new(3.0, 5.0).unwrap();
    let x: Vec<f64> = (0..1_000_000).map(|_| d.sample(&mut rng)).collect();
    let s = standardize(&ReturnSeries::from_values(x, 0, 60)).unwrap();
    let (m, sd) = sample_moments(&s.values);
    assert!(m.abs() < 1e-10, "mean {m}");
    assert!((sd - 1.0).abs() < 1e-10, "sd {sd}");
    assert!((s.mean_used - 3.0).abs() < 0.05);
    assert!((s.sd_used - 5.0).abs() < 0.05);
}

#[test]
fn forward_filled_span_has_zero_returns() {
    let bars = BarSeries::new(0, 60, vec![5.0; 50], {
        let mut f = vec![true; 50];
        f[0] = false;
        f
    })
    .unwrap();
    assert!(log_returns(&bars).unwrap().values.iter().all(|&r| r == 0.0));
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 3..200)
        .prop_filter("needs spread", |v| v.iter().any(|x| (x - v[0]).abs() > 1e-3))
}

proptest! {
    #[test]
    fn standardize_is_idempotent(x in series()) {
        let once = standardize(&ReturnSeries::from_values(x, 0, 60)).unwrap();
        let twice = standardize(&once).unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn affine_shift_gives_same_standardized_output(x in series(), a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let base = standardize(&ReturnSeries::from_values(x.clone(), 0, 60)).unwrap();
        let moved = standardize(&ReturnSeries::from_values(x.iter().map(|v| a * v + b).collect(), 0, 60)).unwrap();
        for (p, q) in base.values.iter().zip(&moved.values) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn returns_telescope(prices in prop::collection::vec(0.01f64..1e6, 2..300)) {
        let bars = BarSeries::from_prices(0, 60, prices.clone()).unwrap();
        let r = log_returns(&bars).unwrap();
        prop_assert_eq!(r.len(), prices.len() - 1);
        let total: f64 = r.values.iter().sum();
        let want = prices[prices.len() - 1].ln() - prices[0].ln();
        prop_assert!((total - want).abs() <= 1e-9 * want.abs().max(1.0));
    }
}
