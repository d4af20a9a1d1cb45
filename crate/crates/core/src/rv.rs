//! Daily realized volatility and returns standardized by it.
//!
//! A UTC day `D` is complete when the bar series holds the close just before
//! midnight and all 288 five-minute bars of `D`. Its 288 intraday returns run
//! from that prior close to the day's last close, so they sum to the daily
//! log return.

use std::io::Write;

use chrono::{DateTime, NaiveDate};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt;
use crate::ingest::BarSeries;
use crate::memory;
use crate::stats;

/// Sampling interval for realized volatility, in seconds.
pub const RV_INTERVAL: i64 = 300;

/// Seconds per UTC day.
pub const DAY: i64 = 86_400;

/// Intraday returns per complete day.
pub const RETURNS_PER_DAY: usize = (DAY / RV_INTERVAL) as usize;

/// Band fraction at or above which a series counts as white.
pub const WHITE_BAND_PASS: f64 = 0.93;

/// Daily realized volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct RvSeries {
    pub days: Vec<NaiveDate>,
    /// Sum of squared intraday log returns.
    pub rv: Vec<f64>,
    pub n_intraday: Vec<usize>,
    /// Log return from the previous day's last close to this day's last close.
    pub daily_return: Vec<f64>,
    /// True when every bar of the day was forward-filled.
    pub all_filled: Vec<bool>,
}

impl RvSeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Emits `date,rv,n_intraday,daily_return`.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "date,rv,n_intraday,daily_return")?;
        for i in 0..self.len() {
            writeln!(
                sink,
                "{},{},{},{}",
                self.days[i],
                fmt::float(self.rv[i]),
                self.n_intraday[i],
                fmt::float(self.daily_return[i])
            )?;
        }
        sink.flush()?;
        Ok(())
    }
}

fn day_date(day: i64) -> NaiveDate {
    DateTime::from_timestamp(day * DAY, 0)
        .expect("timestamp in chrono range")
        .date_naive()
}

/// Realized volatility of every complete UTC day covered by 5-minute bars.
/// Incomplete leading and trailing days are dropped.
pub fn realized_volatility(bars: &BarSeries) -> Result<RvSeries> {
    if bars.interval() != RV_INTERVAL {
        return Err(Error::WrongInterval {
            expected: RV_INTERVAL,
            found: bars.interval(),
        });
    }
    let start = bars.start();
    let first_day = (start + RV_INTERVAL).div_euclid(DAY) + i64::from((start + RV_INTERVAL).rem_euclid(DAY) != 0);
    let last_day = bars.end().div_euclid(DAY) - 1;
    if last_day < first_day {
        return Err(Error::NoCompleteDay);
    }
    let prices = bars.prices();
    let fills = bars.fill_flags();
    let rows: Vec<(f64, f64, bool)> = (first_day..=last_day)
        .into_par_iter()
        .map(|day| {
            let i0 = ((day * DAY - RV_INTERVAL - start) / RV_INTERVAL) as usize;
            let logs: Vec<f64> = prices[i0..=i0 + RETURNS_PER_DAY].iter().map(|p| p.ln()).collect();
            let rv: f64 = logs.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
            let daily = logs[RETURNS_PER_DAY] - logs[0];
            let all_filled = fills[i0 + 1..=i0 + RETURNS_PER_DAY].iter().all(|&f| f);
            (rv, daily, all_filled)
        })
        .collect();
    let n = rows.len();
    Ok(RvSeries {
        days: (first_day..=last_day).map(day_date).collect(),
        rv: rows.iter().map(|r| r.0).collect(),
        n_intraday: vec![RETURNS_PER_DAY; n],
        daily_return: rows.iter().map(|r| r.1).collect(),
        all_filled: rows.iter().map(|r| r.2).collect(),
    })
}

/// Daily returns divided by `sqrt(RV)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedReturns {
    pub days: Vec<NaiveDate>,
    pub values: Vec<f64>,
    /// Days dropped because their realized volatility was zero.
    pub excluded_zero_rv: usize,
}

/// `R_t / sqrt(RV_t)` for every day with positive realized volatility.
pub fn standardize_by_rv(rvs: &RvSeries) -> Result<StandardizedReturns> {
    if rvs.is_empty() {
        return Err(Error::NoCompleteDay);
    }
    let mut days = Vec::with_capacity(rvs.len());
    let mut values = Vec::with_capacity(rvs.len());
    for i in 0..rvs.len() {
        if rvs.rv[i] > 0.0 {
            days.push(rvs.days[i]);
            values.push(rvs.daily_return[i] / rvs.rv[i].sqrt());
        }
    }
    if values.is_empty() {
        return Err(Error::AllZeroRv);
    }
    Ok(StandardizedReturns {
        excluded_zero_rv: rvs.len() - values.len(),
        days,
        values,
    })
}

/// Sample moments. `sd` uses denominator `N - 1`; skewness and kurtosis use
/// central moments with denominator `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn normality_stats(x: &[f64]) -> Result<NormalityStats> {
    if x.len() < 30 {
        return Err(Error::InvalidArgument(format!(
            "need at least 30 observations, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = stats::mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if !(m2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(NormalityStats {
        n: x.len(),
        mean,
        sd: (m2 * n / (n - 1.0)).sqrt(),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// Autocorrelation diagnostics of `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhitenessReport {
    /// Fraction of lags `1..=max_lag` with `|ACF| < 2/sqrt(n)`.
    pub band_fraction: f64,
    pub ljung_box_20: f64,
    pub ljung_box_100: f64,
    pub n: usize,
    pub max_lag: usize,
}

impl WhitenessReport {
    pub fn is_white(&self) -> bool {
        self.band_fraction >= WHITE_BAND_PASS
    }
}

fn ljung_box(acf: &[f64], n: usize, h: usize) -> f64 {
    let nf = n as f64;
    nf * (nf + 2.0) * (1..=h).map(|k| acf[k] * acf[k] / (nf - k as f64)).sum::<f64>()
}

/// ACF of `|x|` to `min(200, n/10)` lags: fraction inside the `2/sqrt(n)`
/// band, plus Ljung-Box statistics at lags 20 and 100.
pub fn whiteness_check(x: &[f64]) -> Result<WhitenessReport> {
    let n = x.len();
    if n < 500 {
        return Err(Error::InvalidArgument(format!(
            "need at least 500 observations, got {n}"
        )));
    }
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let max_lag = 200.min(n / 10);
    let a = memory::acf(&abs, max_lag.max(100))?;
    Ok(WhitenessReport {
        band_fraction: a.band_fraction(1..=max_lag, 2.0 / (n as f64).sqrt()),
        ljung_box_20: ljung_box(&a.values, n, 20),
        ljung_box_100: ljung_box(&a.values, n, 100),
        n,
        max_lag,
    })
}
