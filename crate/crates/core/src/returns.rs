//! Log returns, standardization and the calendar periods analyzed.

use std::fmt as stdfmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::fmt;
use crate::ingest::BarSeries;
use crate::stats;

/// Log returns at a fixed interval, optionally standardized.
///
/// `values[k]` is the return from bar `k` to bar `k + 1` and is stamped with
/// the opening time of bar `k + 1`. When `standardized` is false,
/// `mean_used = 0` and `sd_used = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    /// Timestamp of the first return.
    pub start: i64,
    pub interval: i64,
    pub standardized: bool,
    pub mean_used: f64,
    pub sd_used: f64,
    /// True where the return ends on a forward-filled bar (and is therefore 0).
    pub fill_flags: Vec<bool>,
}

impl ReturnSeries {
    /// Wraps raw values, e.g. draws from a synthetic model.
    pub fn from_values(values: Vec<f64>, start: i64, interval: i64) -> Self {
        let n = values.len();
        Self {
            values,
            start,
            interval,
            standardized: false,
            mean_used: 0.0,
            sd_used: 1.0,
            fill_flags: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, k: usize) -> i64 {
        self.start + k as i64 * self.interval
    }

    /// Values with fill-generated zeros removed.
    pub fn without_fills(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.fill_flags)
            .filter(|(_, &f)| !f)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Emits `timestamp,return` with a header line.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "timestamp,return")?;
        for (k, &v) in self.values.iter().enumerate() {
            writeln!(sink, "{},{}", self.timestamp(k), fmt::float(v))?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads `timestamp,return` rows as an unstandardized series. The
    /// timestamps must be uniformly spaced; a single row gets interval 0.
    pub fn read_csv<R: BufRead>(source: R) -> Result<Self> {
        let mut stamps = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if idx == 0 {
                if line != "timestamp,return" {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unexpected header {line:?}"),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parsed = line.split_once(',').and_then(|(t, v)| {
                Some((t.parse::<i64>().ok()?, v.parse::<f64>().ok()?))
            });
            let (t, v) = parsed.ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: "expected timestamp,return".into(),
            })?;
            stamps.push(t);
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::NoRecords);
        }
        let interval = if stamps.len() > 1 { stamps[1] - stamps[0] } else { 0 };
        if let Some(i) = stamps.windows(2).position(|w| w[1] - w[0] != interval) {
            return Err(Error::Parse {
                line: i + 3,
                msg: "returns are not uniformly spaced".into(),
            });
        }
        Ok(Self::from_values(values, stamps[0], interval))
    }
}

/// `R_t = log p_t - log p_{t-1}` over consecutive bars.
pub fn log_returns(bars: &BarSeries) -> Result<ReturnSeries> {
    let p = bars.prices();
    if p.len() < 2 {
        return Err(Error::TooFewBars {
            found: p.len(),
            required: 2,
        });
    }
    let values = p.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    Ok(ReturnSeries {
        values,
        start: bars.timestamp(1),
        interval: bars.interval(),
        standardized: false,
        mean_used: 0.0,
        sd_used: 1.0,
        fill_flags: bars.fill_flags()[1..].to_vec(),
    })
}

/// `(R_t - mean) / sd` with the sample standard deviation (denominator N - 1).
pub fn standardize(r: &ReturnSeries) -> Result<ReturnSeries> {
    let x = &r.values;
    if x.len() < 2 {
        return Err(Error::DegenerateSeries);
    }
    let mean = stats::mean(x);
    let sd = stats::sample_variance(x, mean).sqrt();
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::DegenerateSeries);
    }
    Ok(ReturnSeries {
        values: x.iter().map(|v| (v - mean) / sd).collect(),
        start: r.start,
        interval: r.interval,
        standardized: true,
        mean_used: mean,
        sd_used: sd,
        fill_flags: r.fill_flags.clone(),
    })
}

/// Calendar window `[begin, end)` applied to bar timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    /// 2011-09-11 through 2013-12-31, the low-liquidity era.
    I,
    /// 2015-01-01 through 2020-06-21, the high-liquidity era.
    II,
    /// 2011-09-11 through 2020-06-21.
    Full,
    Custom { begin: NaiveDate, end: NaiveDate },
}

fn midnight(d: NaiveDate) -> i64 {
    d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp()
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

impl Period {
    /// Inclusive first day and exclusive end day.
    pub fn dates(&self) -> (NaiveDate, NaiveDate) {
        match *self {
            Period::I => (date(2011, 9, 11), date(2014, 1, 1)),
            Period::II => (date(2015, 1, 1), date(2020, 6, 22)),
            Period::Full => (date(2011, 9, 11), date(2020, 6, 22)),
            Period::Custom { begin, end } => (begin, end),
        }
    }

    /// Unix-second bounds `[begin, end)` at UTC midnight.
    pub fn bounds(&self) -> (i64, i64) {
        let (b, e) = self.dates();
        (midnight(b), midnight(e))
    }

    /// Tail fitting region in standard deviations used for this period.
    pub fn default_tail_region(&self) -> (f64, f64) {
        match self {
            Period::Full => (1.0, 10.0),
            _ => (2.0, 20.0),
        }
    }
}

impl stdfmt::Display for Period {
    fn fmt(&self, f: &mut stdfmt::Formatter<'_>) -> stdfmt::Result {
        match self {
            Period::I => f.write_str("I"),
            Period::II => f.write_str("II"),
            Period::Full => f.write_str("full"),
            Period::Custom { begin, end } => write!(f, "{begin}..{end}"),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Accepts `I`, `II`, `full`, or `YYYY-MM-DD..YYYY-MM-DD` (end exclusive).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(Period::I),
            "II" | "ii" | "2" => Ok(Period::II),
            "full" | "FULL" | "all" => Ok(Period::Full),
            other => {
                let bad = || Error::InvalidArgument(format!("unrecognized period {other:?}"));
                let (a, b) = other.split_once("..").ok_or_else(bad)?;
                let begin = NaiveDate::parse_from_str(a.trim(), "%Y-%m-%d").map_err(|_| bad())?;
                let end = NaiveDate::parse_from_str(b.trim(), "%Y-%m-%d").map_err(|_| bad())?;
                if end <= begin {
                    return Err(Error::InvalidArgument(format!(
                        "period end {end} is not after begin {begin}"
                    )));
                }
                Ok(Period::Custom { begin, end })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bars(prices: &[f64]) -> BarSeries {
        BarSeries::from_prices(0, 60, prices.to_vec()).unwrap()
    }

    #[test]
    fn unchanged_price_is_zero_return() {
        assert_eq!(log_returns(&bars(&[100.0, 100.0])).unwrap().values, vec![0.0]);
    }

    #[test]
    fn log_identity() {
        let r = log_returns(&bars(&[100.0, 100.0 * std::f64::consts::E])).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn direct_formula() {
        let r = log_returns(&bars(&[100.0, 110.0, 99.0])).unwrap();
        assert!((r.values[0] - 1.1f64.ln()).abs() < 1e-15);
        assert!((r.values[1] - 0.9f64.ln()).abs() < 1e-15);
        assert_eq!(r.start, 60);
        assert_eq!(r.timestamp(1), 120);
        assert!(!r.standardized);
    }

    #[test]
    fn two_point_standardization() {
        let r = ReturnSeries::from_values(vec![-1.0, 1.0], 0, 60);
        let s = standardize(&r).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((s.values[0] + h).abs() < 1e-15 && (s.values[1] - h).abs() < 1e-15);
        assert_eq!(s.mean_used, 0.0);
        assert!((s.sd_used - 2f64.sqrt()).abs() < 1e-15);
        assert!(s.standardized);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let r = ReturnSeries::from_values(vec![0.5; 10], 0, 60);
        let err = standardize(&r).unwrap_err();
        assert_eq!(err.to_string(), "degenerate series");
        assert!(standardize(&ReturnSeries::from_values(vec![1.0], 0, 60)).is_err());
    }

    #[test]
    fn fill_flags_follow_bars() {
        let b = BarSeries::new(0, 60, vec![1.0, 1.0, 2.0], vec![false, true, false]).unwrap();
        let r = log_returns(&b).unwrap();
        assert_eq!(r.fill_flags, vec![true, false]);
        assert_eq!(r.without_fills(), vec![2f64.ln()]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = ReturnSeries::from_values(vec![0.1, -1.0 / 3.0, 1e-300, 7.0e12], 60, 60);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = ReturnSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values, r.values);
        assert_eq!(back.start, 60);
        assert_eq!(back.interval, 60);
    }

    #[test]
    fn periods() {
        assert_eq!(Period::I.bounds(), (1_315_699_200, 1_388_534_400));
        assert_eq!(Period::II.bounds().0, 1_420_070_400);
        assert_eq!(Period::II.bounds().1, 1_592_784_000);
        assert_eq!("II".parse::<Period>().unwrap(), Period::II);
        let p: Period = "2015-01-10..2020-06-22".parse().unwrap();
        assert_eq!(p.to_string(), "2015-01-10..2020-06-22");
        assert!("2015-01-10..2014-01-01".parse::<Period>().is_err());
        assert!("nope".parse::<Period>().is_err());
        assert_eq!(Period::Full.default_tail_region(), (1.0, 10.0));
        assert_eq!(Period::I.default_tail_region(), (2.0, 20.0));
    }
}
