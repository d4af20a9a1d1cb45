//! Autocorrelation, delete-one-block jackknife errors, and power-law fits of
//! slowly decaying autocorrelation.
//!
//! The estimator uses the full-sample mean and variance with a per-lag
//! normalization:
//!
//! ```text
//! ACF(t) = [ sum_{i=1..N-t} (x_i - m)(x_{i+t} - m) / (N - t) ] / var(x)
//! ```
//!
//! where `var` has denominator `N`, so `ACF(0) = 1`. Values are clamped to
//! `[-1, 1]`; the `1/(N-t)` normalization can step slightly outside at lags
//! close to `N`.

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt;
use crate::regress;
use crate::stats;

/// Largest lag count evaluated by direct summation in [`acf`]; beyond it the
/// FFT route is used.
pub const DIRECT_MAX_LAG: usize = 32;

/// Default number of jackknife blocks.
pub const DEFAULT_BLOCKS: usize = 50;

/// Autocorrelation at lags `0..=max_lag`, with optional jackknife errors.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfEstimate {
    pub values: Vec<f64>,
    /// One-sigma jackknife error per lag, where computed.
    pub sigma: Vec<Option<f64>>,
    /// Length of the input series.
    pub n: usize,
}

impl AcfEstimate {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn lags(&self) -> RangeInclusive<usize> {
        0..=self.max_lag()
    }

    /// Computes jackknife errors at `lags` from the series the estimate was
    /// built on.
    pub fn attach_jackknife(&mut self, x: &[f64], lags: &[usize], n_blocks: usize) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "series length {} does not match estimate length {}",
                x.len(),
                self.n
            )));
        }
        for &lag in lags {
            if lag > self.max_lag() {
                return Err(Error::InvalidArgument(format!(
                    "jackknife lag {lag} exceeds max lag {}",
                    self.max_lag()
                )));
            }
            self.sigma[lag] = Some(jackknife_sigma(x, lag, n_blocks)?);
        }
        Ok(())
    }

    /// Fraction of lags in `lags` with `|ACF| < half_width`.
    pub fn band_fraction(&self, lags: RangeInclusive<usize>, half_width: f64) -> f64 {
        let (lo, hi) = (*lags.start(), (*lags.end()).min(self.max_lag()));
        if hi < lo {
            return 0.0;
        }
        let inside = self.values[lo..=hi].iter().filter(|v| v.abs() < half_width).count();
        inside as f64 / (hi - lo + 1) as f64
    }

    /// Emits `lag,acf,sigma`; sigma is left empty where not computed.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "lag,acf,sigma")?;
        for (lag, (v, s)) in self.values.iter().zip(&self.sigma).enumerate() {
            match s {
                Some(s) => writeln!(sink, "{lag},{},{}", fmt::float(*v), fmt::float(*s))?,
                None => writeln!(sink, "{lag},{},", fmt::float(*v))?,
            }
        }
        sink.flush()?;
        Ok(())
    }
}

fn centered(x: &[f64], max_lag: usize) -> Result<(Vec<f64>, f64)> {
    if max_lag < 1 || x.len() <= max_lag {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= max_lag < series length, got max_lag {max_lag} for length {}",
            x.len()
        )));
    }
    let m = stats::mean(x);
    let y: Vec<f64> = x.iter().map(|v| v - m).collect();
    let var = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::ZeroVariance);
    }
    Ok((y, var))
}

fn finish(mut values: Vec<f64>, n: usize) -> AcfEstimate {
    values[0] = 1.0;
    for v in values.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }
    let len = values.len();
    AcfEstimate {
        values,
        sigma: vec![None; len],
        n,
    }
}

/// Autocorrelation up to `max_lag`. Chooses direct summation for short lag
/// ranges and an FFT otherwise; both give the same estimator.
pub fn acf(x: &[f64], max_lag: usize) -> Result<AcfEstimate> {
    if max_lag <= DIRECT_MAX_LAG {
        acf_direct(x, max_lag)
    } else {
        acf_fft(x, max_lag)
    }
}

/// O(N * max_lag) summation, parallel over lags.
pub fn acf_direct(x: &[f64], max_lag: usize) -> Result<AcfEstimate> {
    let (y, var) = centered(x, max_lag)?;
    let n = y.len();
    let values = (0..=max_lag)
        .into_par_iter()
        .map(|t| {
            let s: f64 = y[..n - t].iter().zip(&y[t..]).map(|(a, b)| a * b).sum();
            s / (n - t) as f64 / var
        })
        .collect();
    Ok(finish(values, n))
}

/// Lagged products from the power spectrum of the zero-padded series.
pub fn acf_fft(x: &[f64], max_lag: usize) -> Result<AcfEstimate> {
    let (y, var) = centered(x, max_lag)?;
    let n = y.len();
    let m = (n + max_lag + 1).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = y
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(m)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = m as f64;
    let values = (0..=max_lag)
        .map(|t| buf[t].re / scale / (n - t) as f64 / var)
        .collect();
    Ok(finish(values, n))
}

fn acf_at(x: &[f64], lag: usize) -> Result<f64> {
    let n = x.len();
    let m = stats::mean(x);
    let var = stats::pop_variance(x, m);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let s: f64 = x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    Ok(s / (n - lag) as f64 / var)
}

/// Delete-one-block jackknife error of `ACF(lag)`.
///
/// The series is cut into `n_blocks` contiguous blocks of (near) equal length.
/// For each block the remaining blocks are joined in order and `ACF(lag)` is
/// recomputed, giving `theta_b`; the error is
/// `sqrt((B - 1) / B * sum_b (theta_b - mean(theta))^2)`.
pub fn jackknife_sigma(x: &[f64], lag: usize, n_blocks: usize) -> Result<f64> {
    if n_blocks < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 blocks, got {n_blocks}")));
    }
    if lag < 1 {
        return Err(Error::InvalidArgument("jackknife lag must be at least 1".into()));
    }
    let n = x.len();
    let bounds: Vec<usize> = (0..=n_blocks).map(|b| b * n / n_blocks).collect();
    let block_len = n / n_blocks;
    if block_len < 10 * lag {
        return Err(Error::BlocksTooShort { block_len, lag });
    }
    let thetas: Vec<f64> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut sample = Vec::with_capacity(n - (bounds[b + 1] - bounds[b]));
            sample.extend_from_slice(&x[..bounds[b]]);
            sample.extend_from_slice(&x[bounds[b + 1]..]);
            acf_at(&sample, lag)
        })
        .collect::<Result<_>>()?;
    let bf = n_blocks as f64;
    let mean = thetas.iter().sum::<f64>() / bf;
    let ss: f64 = thetas.iter().map(|t| (t - mean) * (t - mean)).sum();
    Ok(((bf - 1.0) / bf * ss).sqrt())
}

/// Power-law fit `ACF(t) ~ t^exponent` over a lag region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcfPowerLawFit {
    pub region: [usize; 2],
    pub exponent: f64,
    pub stderr: f64,
}

/// Least squares of `log ACF(t)` on `log t` over integer lags in
/// `[t_lo, t_hi]`. Every ACF value in the region must be positive.
pub fn fit_acf_powerlaw(a: &AcfEstimate, region: (usize, usize)) -> Result<AcfPowerLawFit> {
    let (lo, hi) = region;
    if lo < 1 || hi <= lo {
        return Err(Error::InvalidArgument(format!("bad lag region [{lo}, {hi}]")));
    }
    if hi > a.max_lag() {
        return Err(Error::InvalidArgument(format!(
            "lag region [{lo}, {hi}] exceeds max lag {}",
            a.max_lag()
        )));
    }
    if let Some(off) = a.values[lo..=hi].iter().position(|v| !(*v > 0.0)) {
        return Err(Error::AcfNotPositive { lag: lo + off });
    }
    let lt: Vec<f64> = (lo..=hi).map(|t| (t as f64).ln()).collect();
    let la: Vec<f64> = a.values[lo..=hi].iter().map(|v| v.ln()).collect();
    let fit = regress::ols(&lt, &la)?;
    Ok(AcfPowerLawFit {
        region: [lo, hi],
        exponent: fit.slope,
        stderr: fit.slope_stderr,
    })
}
