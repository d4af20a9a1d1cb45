//! Trade-print parsing and uniform bar construction.
//!
//! Input is the Bitcoincharts layout `unixtime,price,volume` (no header). Bars
//! are aligned to multiples of the interval since the Unix epoch, priced at the
//! last trade in each interval by default, and empty intervals carry the
//! previous price forward with `filled` set.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fmt;

/// One trade print.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    /// Unix seconds, UTC.
    pub timestamp: i64,
    pub price: f64,
    pub volume: f64,
}

/// Column layout of a delimited tick file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickFormat {
    pub delimiter: u8,
    pub fields: usize,
    pub time_col: usize,
    pub price_col: usize,
    pub volume_col: usize,
}

impl TickFormat {
    /// `unixtime,price,volume`, as served by the Bitcoincharts CSV archive.
    pub fn bitcoincharts() -> Self {
        Self {
            delimiter: b',',
            fields: 3,
            time_col: 0,
            price_col: 1,
            volume_col: 2,
        }
    }
}

impl Default for TickFormat {
    fn default() -> Self {
        Self::bitcoincharts()
    }
}

/// Result of [`parse_ticks`]: records in timestamp order plus the number of
/// lines that were rejected.
#[derive(Debug, Clone, Default)]
pub struct ParsedTicks {
    pub records: Vec<TickRecord>,
    pub skipped: usize,
}

fn parse_line(line: &str, format: &TickFormat) -> Option<TickRecord> {
    let delim = format.delimiter as char;
    let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
    if fields.len() != format.fields {
        return None;
    }
    let timestamp: i64 = fields[format.time_col].parse().ok()?;
    let price: f64 = fields[format.price_col].parse().ok()?;
    let volume: f64 = fields[format.volume_col].parse().ok()?;
    if !(price.is_finite() && price > 0.0) || !(volume.is_finite() && volume >= 0.0) {
        return None;
    }
    Some(TickRecord {
        timestamp,
        price,
        volume,
    })
}

/// Parses newline-delimited trade prints.
///
/// Malformed lines (wrong field count, non-numeric fields, non-positive
/// price, negative volume, invalid UTF-8) are skipped and counted. Blank lines
/// are ignored. Records are sorted stably by timestamp, so prints sharing a
/// timestamp keep file order.
pub fn parse_ticks<R: BufRead>(mut source: R, format: &TickFormat) -> Result<ParsedTicks> {
    let mut out = ParsedTicks::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => s.trim_end_matches(['\n', '\r']),
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, format) {
            Some(rec) => out.records.push(rec),
            None => out.skipped += 1,
        }
    }
    if out.records.is_empty() {
        return Err(Error::NoRecords);
    }
    if !out.records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp) {
        out.records.sort_by_key(|r| r.timestamp);
    }
    Ok(out)
}

/// Writes ticks in the Bitcoincharts layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_ticks<W: Write>(mut sink: W, ticks: &[TickRecord]) -> Result<()> {
    for t in ticks {
        writeln!(sink, "{},{},{}", t.timestamp, t.price, t.volume)?;
    }
    sink.flush()?;
    Ok(())
}

/// How a bar's price is derived from the trades inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BarPrice {
    /// Last trade in the interval.
    #[default]
    Close,
    Mean,
    Median,
}

/// Uniformly spaced price series. Bar `i` covers
/// `[start + i*interval, start + (i+1)*interval)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    start: i64,
    interval: i64,
    prices: Vec<f64>,
    fill_flags: Vec<bool>,
}

impl BarSeries {
    /// Validates the series invariants. The first bar may not be a fill.
    pub fn new(start: i64, interval: i64, prices: Vec<f64>, fill_flags: Vec<bool>) -> Result<Self> {
        if interval <= 0 {
            return Err(Error::InvalidArgument(format!("interval must be positive, got {interval}")));
        }
        if start.rem_euclid(interval) != 0 {
            return Err(Error::InvalidArgument(format!(
                "start {start} is not aligned to {interval}s"
            )));
        }
        if prices.len() != fill_flags.len() {
            return Err(Error::InvalidArgument("prices and fill flags differ in length".into()));
        }
        if prices.len() < 2 {
            return Err(Error::TooFewBars {
                found: prices.len(),
                required: 2,
            });
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidArgument(format!("bar price {p} is not positive")));
        }
        if fill_flags[0] {
            return Err(Error::InvalidArgument("first bar cannot be a fill".into()));
        }
        for i in 1..prices.len() {
            if fill_flags[i] && prices[i] != prices[i - 1] {
                return Err(Error::InvalidArgument(format!(
                    "filled bar {i} does not repeat the previous price"
                )));
            }
        }
        Ok(Self {
            start,
            interval,
            prices,
            fill_flags,
        })
    }

    /// Series with no filled bars, e.g. a synthetic price path.
    pub fn from_prices(start: i64, interval: i64, prices: Vec<f64>) -> Result<Self> {
        let n = prices.len();
        Self::new(start, interval, prices, vec![false; n])
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn interval(&self) -> i64 {
        self.interval
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn fill_flags(&self) -> &[bool] {
        &self.fill_flags
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Opening timestamp of bar `i`.
    pub fn timestamp(&self, i: usize) -> i64 {
        self.start + i as i64 * self.interval
    }

    /// End of the last bar (exclusive).
    pub fn end(&self) -> i64 {
        self.timestamp(self.len())
    }

    /// Emits `timestamp,price,filled` with a header line.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "timestamp,price,filled")?;
        for (i, (&p, &f)) in self.prices.iter().zip(&self.fill_flags).enumerate() {
            writeln!(sink, "{},{},{}", self.timestamp(i), fmt::float(p), u8::from(f))?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`BarSeries::write_csv`].
    pub fn read_csv<R: BufRead>(source: R) -> Result<Self> {
        let mut stamps = Vec::new();
        let mut prices = Vec::new();
        let mut flags = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if idx == 0 {
                if line != "timestamp,price,filled" {
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
            let bad = |msg: &str| Error::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let mut it = line.split(',');
            let ts: i64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad timestamp"))?;
            let price: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad price"))?;
            let filled = match it.next() {
                Some("1") | Some("true") => true,
                Some("0") | Some("false") => false,
                _ => return Err(bad("bad filled flag")),
            };
            if it.next().is_some() {
                return Err(bad("too many fields"));
            }
            stamps.push(ts);
            prices.push(price);
            flags.push(filled);
        }
        if stamps.len() < 2 {
            return Err(Error::TooFewBars {
                found: stamps.len(),
                required: 2,
            });
        }
        let interval = stamps[1] - stamps[0];
        if let Some(i) = stamps.windows(2).position(|w| w[1] - w[0] != interval) {
            return Err(Error::Parse {
                line: i + 3,
                msg: "bars are not uniformly spaced".into(),
            });
        }
        Self::new(stamps[0], interval, prices, flags)
    }
}

fn aggregate(prices: &mut [f64], how: BarPrice) -> f64 {
    match how {
        BarPrice::Close => *prices.last().expect("non-empty bucket"),
        BarPrice::Mean => prices.iter().sum::<f64>() / prices.len() as f64,
        BarPrice::Median => {
            prices.sort_by(f64::total_cmp);
            let n = prices.len();
            if n % 2 == 1 {
                prices[n / 2]
            } else {
                0.5 * (prices[n / 2 - 1] + prices[n / 2])
            }
        }
    }
}

/// Builds closing-price bars. See [`build_bars_with`].
pub fn build_bars(ticks: &[TickRecord], interval: i64, range: Option<(i64, i64)>) -> Result<BarSeries> {
    build_bars_with(ticks, interval, range, BarPrice::Close)
}

/// Resamples sorted ticks onto an epoch-aligned grid of `interval` seconds.
///
/// Only ticks inside `range = [t_begin, t_end)` are used. Intervals before the
/// first trade are dropped; later empty intervals repeat the previous price
/// and are flagged. Without a range the grid ends with the bar holding the
/// last trade; with a range it runs until `t_end`.
pub fn build_bars_with(
    ticks: &[TickRecord],
    interval: i64,
    range: Option<(i64, i64)>,
    how: BarPrice,
) -> Result<BarSeries> {
    if interval <= 0 {
        return Err(Error::InvalidArgument(format!("interval must be positive, got {interval}")));
    }
    if ticks.is_empty() {
        return Err(Error::NoRecords);
    }
    if !ticks.windows(2).all(|w| w[0].timestamp <= w[1].timestamp) {
        return Err(Error::InvalidArgument("ticks are not sorted by timestamp".into()));
    }
    let ticks = match range {
        Some((lo, hi)) => {
            if hi <= lo {
                return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi})")));
            }
            let a = ticks.partition_point(|t| t.timestamp < lo);
            let b = ticks.partition_point(|t| t.timestamp < hi);
            if a == b {
                return Err(Error::RangeOutsideData);
            }
            &ticks[a..b]
        }
        None => ticks,
    };

    let first = ticks[0].timestamp;
    let last = ticks[ticks.len() - 1].timestamp;
    let start = first.div_euclid(interval) * interval;
    let end = match range {
        Some((_, hi)) => hi,
        None => last + 1,
    };
    let n = (end - start + interval - 1).div_euclid(interval) as usize;

    let mut prices = vec![f64::NAN; n];
    let mut bucket: Vec<f64> = Vec::new();
    let mut current = usize::MAX;
    for t in ticks {
        let idx = ((t.timestamp - start) / interval) as usize;
        if idx != current {
            if current != usize::MAX {
                prices[current] = aggregate(&mut bucket, how);
            }
            bucket.clear();
            current = idx;
        }
        bucket.push(t.price);
    }
    prices[current] = aggregate(&mut bucket, how);

    let mut flags = vec![false; n];
    for i in 1..n {
        if prices[i].is_nan() {
            prices[i] = prices[i - 1];
            flags[i] = true;
        }
    }
    BarSeries::new(start, interval, prices, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tick(timestamp: i64, price: f64) -> TickRecord {
        TickRecord {
            timestamp,
            price,
            volume: 1.0,
        }
    }

    #[test]
    fn parses_two_lines() {
        let src = "1315922016,5.80,1.0\n1315922024,5.83,3.0";
        let parsed = parse_ticks(src.as_bytes(), &TickFormat::default()).unwrap();
        assert_eq!(parsed.skipped, 0);
        let prices: Vec<f64> = parsed.records.iter().map(|r| r.price).collect();
        assert_eq!(prices, vec![5.80, 5.83]);
        assert_eq!(parsed.records[1].volume, 3.0);
    }

    #[test]
    fn malformed_only_input_is_no_records() {
        let err = parse_ticks("1315922016,abc,1.0".as_bytes(), &TickFormat::default()).unwrap_err();
        assert!(matches!(err, Error::NoRecords));
        assert_eq!(err.to_string(), "no records");
    }

    #[test]
    fn counts_skipped_lines() {
        let src = "1,abc,1.0\n2,5.0\n3,-1.0,1.0\n4,0,1\n5,2.0,1.0\r\n\n6,2.5,x\n";
        let parsed = parse_ticks(src.as_bytes(), &TickFormat::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.skipped, 5);
        assert_eq!(parsed.records[0].timestamp, 5);
    }

    #[test]
    fn sorts_stably() {
        let src = "20,1.0,1\n10,2.0,1\n20,3.0,1\n10,4.0,1\n";
        let parsed = parse_ticks(src.as_bytes(), &TickFormat::default()).unwrap();
        let prices: Vec<f64> = parsed.records.iter().map(|r| r.price).collect();
        assert_eq!(prices, vec![2.0, 4.0, 1.0, 3.0]);
    }

    #[test]
    fn empty_input_is_error() {
        assert!(matches!(
            parse_ticks("".as_bytes(), &TickFormat::default()),
            Err(Error::NoRecords)
        ));
    }

    #[test]
    fn custom_layout() {
        let format = TickFormat {
            delimiter: b';',
            fields: 4,
            time_col: 3,
            price_col: 0,
            volume_col: 1,
        };
        let parsed = parse_ticks("7.5;2;x;100\n".as_bytes(), &format).unwrap();
        assert_eq!(parsed.records, vec![TickRecord { timestamp: 100, price: 7.5, volume: 2.0 }]);
    }

    #[test]
    fn last_price_and_forward_fill() {
        let ticks = [tick(0, 10.0), tick(30, 11.0), tick(130, 12.0)];
        let bars = build_bars(&ticks, 60, None).unwrap();
        assert_eq!(bars.prices(), &[11.0, 11.0, 12.0]);
        assert_eq!(bars.fill_flags(), &[false, true, false]);
        assert_eq!(bars.start(), 0);
    }

    #[test]
    fn single_tick_over_range() {
        let bars = build_bars(&[tick(60, 5.0)], 60, Some((60, 240))).unwrap();
        assert_eq!(bars.prices(), &[5.0, 5.0, 5.0]);
        assert_eq!(bars.fill_flags(), &[false, true, true]);
    }

    #[test]
    fn leading_empty_intervals_dropped() {
        let bars = build_bars(&[tick(185, 5.0), tick(250, 6.0)], 60, Some((0, 300))).unwrap();
        assert_eq!(bars.start(), 180);
        assert_eq!(bars.prices(), &[5.0, 6.0]);
    }

    #[test]
    fn mean_and_median_prices() {
        let ticks = [tick(0, 1.0), tick(10, 2.0), tick(20, 9.0), tick(60, 4.0), tick(61, 6.0)];
        let mean = build_bars_with(&ticks, 60, None, BarPrice::Mean).unwrap();
        assert_eq!(mean.prices(), &[4.0, 5.0]);
        let median = build_bars_with(&ticks, 60, None, BarPrice::Median).unwrap();
        assert_eq!(median.prices(), &[2.0, 5.0]);
    }

    #[test]
    fn bar_errors() {
        assert!(matches!(build_bars(&[], 60, None), Err(Error::NoRecords)));
        let ticks = [tick(0, 1.0), tick(100, 2.0)];
        assert!(matches!(
            build_bars(&ticks, 60, Some((1000, 2000))),
            Err(Error::RangeOutsideData)
        ));
        assert!(matches!(
            build_bars(&[tick(0, 1.0)], 60, None),
            Err(Error::TooFewBars { found: 1, .. })
        ));
        assert!(build_bars(&ticks, 0, None).is_err());
    }

    #[test]
    fn negative_timestamps_align_downward() {
        let bars = build_bars(&[tick(-30, 1.0), tick(10, 2.0)], 60, None).unwrap();
        assert_eq!(bars.start(), -60);
        assert_eq!(bars.prices(), &[1.0, 2.0]);
    }

    #[test]
    fn bar_csv_round_trip() {
        let ticks = [tick(0, 10.1), tick(130, 12.000000000000002)];
        let bars = build_bars(&ticks, 60, None).unwrap();
        let mut buf = Vec::new();
        bars.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp,price,filled\n0,"));
        let back = BarSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, bars);
    }

    #[test]
    fn series_invariants_enforced() {
        assert!(BarSeries::new(0, 60, vec![1.0, 2.0], vec![false, true]).is_err());
        assert!(BarSeries::new(0, 60, vec![1.0, 1.0], vec![true, false]).is_err());
        assert!(BarSeries::new(30, 60, vec![1.0, 1.0], vec![false, false]).is_err());
        assert!(BarSeries::new(0, 60, vec![1.0, -1.0], vec![false, false]).is_err());
    }
}
