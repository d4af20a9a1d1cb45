//! Small moment helpers shared by the estimators.

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance (denominator N) about a supplied mean.
pub(crate) fn pop_variance(x: &[f64], mean: f64) -> f64 {
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64
}

/// Sample variance (denominator N - 1).
pub(crate) fn sample_variance(x: &[f64], mean: f64) -> f64 {
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (x.len() - 1) as f64
}
