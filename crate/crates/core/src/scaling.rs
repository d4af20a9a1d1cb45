//! Empirical complementary CDFs of returns and power-law tail fits.
//!
//! A tail is fit as `P(|R| >= x) = kappa * x^(-mu)` by least squares on the
//! log-log CCDF, one point per distinct magnitude. `mu` is stored positive;
//! the fitted slope is `-mu`.

use std::fmt as stdfmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt;
use crate::regress;
use crate::returns::ReturnSeries;

/// Minimum observations on a side before a standardized CCDF is built.
pub const MIN_TAIL_OBS: usize = 100;

/// Minimum order-statistic count accepted by [`hill_estimator`].
pub const MIN_HILL_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Positive, Side::Negative];

    /// Short tag used in file names.
    pub fn tag(self) -> &'static str {
        match self {
            Side::Positive => "pos",
            Side::Negative => "neg",
        }
    }

    /// Magnitudes on this side. Zeros belong to neither side.
    pub fn magnitudes(self, values: &[f64]) -> Vec<f64> {
        match self {
            Side::Positive => values.iter().copied().filter(|v| *v > 0.0).collect(),
            Side::Negative => values.iter().filter(|v| **v < 0.0).map(|v| -v).collect(),
        }
    }
}

impl stdfmt::Display for Side {
    fn fmt(&self, f: &mut stdfmt::Formatter<'_>) -> stdfmt::Result {
        f.write_str(match self {
            Side::Positive => "positive",
            Side::Negative => "negative",
        })
    }
}

/// Complementary CDF of one tail, evaluated at each distinct magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfPoints {
    pub side: Side,
    /// Distinct magnitudes, ascending.
    pub x: Vec<f64>,
    /// Fraction of the side's observations at or above `x[i]`.
    pub p: Vec<f64>,
    /// Observations on this side.
    pub n_side: usize,
}

impl CcdfPoints {
    /// Collapses points into logarithmic bins, `bins_per_decade` per factor of
    /// ten. Each occupied bin is represented by the geometric means of its
    /// `x` and `p`.
    pub fn log_binned(&self, bins_per_decade: usize) -> Result<CcdfPoints> {
        if bins_per_decade == 0 {
            return Err(Error::InvalidArgument("bins_per_decade must be positive".into()));
        }
        let width = 1.0 / bins_per_decade as f64;
        let mut x = Vec::new();
        let mut p = Vec::new();
        let mut i = 0;
        while i < self.x.len() {
            let bin = (self.x[i].log10() / width).floor();
            let (mut sx, mut sp, mut count) = (0.0, 0.0, 0usize);
            while i < self.x.len() && (self.x[i].log10() / width).floor() == bin {
                sx += self.x[i].ln();
                sp += self.p[i].ln();
                count += 1;
                i += 1;
            }
            x.push((sx / count as f64).exp());
            p.push((sp / count as f64).exp());
        }
        Ok(CcdfPoints {
            side: self.side,
            x,
            p,
            n_side: self.n_side,
        })
    }

    /// Emits `x,p` with a header line.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "x,p")?;
        for (x, p) in self.x.iter().zip(&self.p) {
            writeln!(sink, "{},{}", fmt::float(*x), fmt::float(*p))?;
        }
        sink.flush()?;
        Ok(())
    }
}

/// CCDF of the positive values, or of `|v|` for the negative values.
pub fn ccdf(values: &[f64], side: Side) -> Result<CcdfPoints> {
    let mut mags = side.magnitudes(values);
    if mags.is_empty() {
        return Err(Error::TooFewObservations {
            side,
            found: 0,
            required: 1,
        });
    }
    mags.sort_by(f64::total_cmp);
    let n = mags.len();
    let nf = n as f64;
    let mut x = Vec::new();
    let mut p = Vec::new();
    for (i, &m) in mags.iter().enumerate() {
        if i == 0 || m != mags[i - 1] {
            x.push(m);
            p.push((n - i) as f64 / nf);
        }
    }
    Ok(CcdfPoints { side, x, p, n_side: n })
}

/// [`ccdf`] of a standardized series, requiring at least [`MIN_TAIL_OBS`]
/// observations on the side.
pub fn ccdf_standardized(r: &ReturnSeries, side: Side) -> Result<CcdfPoints> {
    if !r.standardized {
        return Err(Error::NotStandardized);
    }
    let found = match side {
        Side::Positive => r.values.iter().filter(|v| **v > 0.0).count(),
        Side::Negative => r.values.iter().filter(|v| **v < 0.0).count(),
    };
    if found < MIN_TAIL_OBS {
        return Err(Error::TooFewObservations {
            side,
            found,
            required: MIN_TAIL_OBS,
        });
    }
    ccdf(&r.values, side)
}

/// Power-law fit to one tail over a region of magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub side: Side,
    pub region: [f64; 2],
    /// Tail exponent; the fitted log-log slope is `-mu`.
    pub mu: f64,
    pub kappa: f64,
    pub stderr_mu: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl TailFit {
    /// `kappa * x^(-mu)` at `n` log-spaced points spanning the fit region.
    pub fn curve(&self, n: usize) -> Vec<(f64, f64)> {
        let [lo, hi] = self.region;
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| {
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let x = (a + t * (b - a)).exp();
                (x, self.kappa * x.powf(-self.mu))
            })
            .collect()
    }

    /// Emits the fitted curve as `x,p` for overlaying on the CCDF.
    pub fn write_curve_csv<W: Write>(&self, mut sink: W, n: usize) -> Result<()> {
        writeln!(sink, "x,p")?;
        for (x, p) in self.curve(n) {
            writeln!(sink, "{},{}", fmt::float(x), fmt::float(p))?;
        }
        sink.flush()?;
        Ok(())
    }
}

fn check_region(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad fitting region [{lo}, {hi}]")));
    }
    Ok(())
}

/// Least squares of `log p` on `log x` over CCDF points with `x` in
/// `[lo, hi]`, each distinct magnitude weighted equally.
pub fn fit_tail(c: &CcdfPoints, region: (f64, f64)) -> Result<TailFit> {
    let (lo, hi) = region;
    check_region(lo, hi)?;
    let a = c.x.partition_point(|&x| x < lo);
    let b = c.x.partition_point(|&x| x <= hi);
    if b - a < 3 {
        return Err(Error::TooFewPoints { found: b - a });
    }
    let lx: Vec<f64> = c.x[a..b].iter().map(|x| x.ln()).collect();
    let lp: Vec<f64> = c.p[a..b].iter().map(|p| p.ln()).collect();
    let fit = regress::ols(&lx, &lp)?;
    let mu = -fit.slope;
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "CCDF is not decreasing over [{lo}, {hi}] (slope {})",
            fit.slope
        )));
    }
    Ok(TailFit {
        side: c.side,
        region: [lo, hi],
        mu,
        kappa: fit.intercept.exp(),
        stderr_mu: fit.slope_stderr,
        r_squared: fit.r_squared,
        n_points: fit.n,
    })
}

/// Hill estimate of the tail exponent with its asymptotic standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillEstimate {
    pub side: Side,
    pub k: usize,
    pub mu: f64,
    pub stderr: f64,
}

/// Hill estimator from the `k` largest magnitudes on a side:
/// `mu = k / sum_{i<k} ln(x_(i) / x_(k))` over descending order statistics,
/// `stderr = mu / sqrt(k)`.
pub fn hill_estimator(values: &[f64], side: Side, k: usize) -> Result<HillEstimate> {
    if k < MIN_HILL_K {
        return Err(Error::InvalidArgument(format!("k must be at least {MIN_HILL_K}, got {k}")));
    }
    let mut mags = side.magnitudes(values);
    if mags.len() <= k {
        return Err(Error::TooFewObservations {
            side,
            found: mags.len(),
            required: k + 1,
        });
    }
    // k+1 largest, descending
    mags.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = mags[k];
    let denom: f64 = mags[..k].iter().map(|x| (x / threshold).ln()).sum();
    if !(denom > 0.0) {
        return Err(Error::TiedTail);
    }
    let mu = k as f64 / denom;
    Ok(HillEstimate {
        side,
        k,
        mu,
        stderr: mu / (k as f64).sqrt(),
    })
}
