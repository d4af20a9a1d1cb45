//! End-to-end run: ticks to bars, returns, tail fits, absolute-return ACF,
//! and realized-volatility diagnostics, written out as a bundle of CSV and
//! JSON files.
//!
//! A run is configured by a flat `key = value` file (see [`RunConfig::parse`]);
//! defaults are 60-second bars, tail regions by period, ACF fits over lags
//! `[3, 500]` and `[1500, 10000]` with jackknife errors at lags 100 and 1000,
//! and 5-minute realized volatility.

use std::fmt as stdfmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{self, BarPrice, BarSeries, TickFormat, TickRecord};
use crate::memory::{self, AcfEstimate, AcfPowerLawFit};
use crate::returns::{self, Period, ReturnSeries};
use crate::rv::{self, NormalityStats, RvSeries, StandardizedReturns, WhitenessReport};
use crate::scaling::{self, CcdfPoints, HillEstimate, Side, TailFit, MIN_HILL_K};

/// Points on each fitted overlay curve.
pub const CURVE_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    /// `None` keeps every tick.
    pub period: Option<Period>,
    pub interval: i64,
    pub bar_price: BarPrice,
    /// `None` uses the period's default region.
    pub tail_regions: Option<Vec<(f64, f64)>>,
    pub acf_max_lag: usize,
    pub acf_regions: Vec<(usize, usize)>,
    pub jackknife_lags: Vec<usize>,
    pub jackknife_blocks: usize,
    pub rv: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            period: None,
            interval: 60,
            bar_price: BarPrice::Close,
            tail_regions: None,
            acf_max_lag: 10_000,
            acf_regions: vec![(3, 500), (1500, 10_000)],
            jackknife_lags: vec![100, 1000],
            jackknife_blocks: memory::DEFAULT_BLOCKS,
            rv: true,
            out_dir: PathBuf::from("out"),
            seed: 42,
            threads: None,
        }
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Option<(T, T)> {
    let (a, b) = s.split_once(':')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Applies one `key = value` setting. `input` accumulates; every other key
    /// replaces the current value.
    ///
    /// Keys: `input`, `period` (`I`, `II`, `full`, `YYYY-MM-DD..YYYY-MM-DD` or
    /// `none`), `interval`, `bar_price` (`close`, `mean`, `median`),
    /// `tail_regions` (`2:20,1:10`), `acf_max_lag`, `acf_regions`
    /// (`3:500,1500:10000`), `jackknife_lags` (`100,1000`),
    /// `jackknife_blocks`, `rv`, `out_dir`, `seed`, `threads`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = || Error::InvalidArgument(format!("bad value {value:?} for {key}"));
        match key.trim() {
            "input" => self.inputs.extend(
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from),
            ),
            "period" => {
                self.period = match value {
                    "" | "none" => None,
                    v => Some(v.parse()?),
                }
            }
            "interval" => self.interval = value.parse().map_err(|_| bad())?,
            "bar_price" => {
                self.bar_price = match value {
                    "close" => BarPrice::Close,
                    "mean" => BarPrice::Mean,
                    "median" => BarPrice::Median,
                    _ => return Err(bad()),
                }
            }
            "tail_regions" => self.tail_regions = Some(parse_list(value, parse_pair).ok_or_else(bad)?),
            "acf_max_lag" => self.acf_max_lag = value.parse().map_err(|_| bad())?,
            "acf_regions" => self.acf_regions = parse_list(value, parse_pair).ok_or_else(bad)?,
            "jackknife_lags" => {
                self.jackknife_lags = parse_list(value, |s| s.parse().ok()).ok_or_else(bad)?
            }
            "jackknife_blocks" => self.jackknife_blocks = value.parse().map_err(|_| bad())?,
            "rv" => self.rv = parse_bool(value).ok_or_else(bad)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "threads" => {
                self.threads = match value {
                    "" | "auto" => None,
                    v => Some(v.parse().map_err(|_| bad())?),
                }
            }
            other => return Err(Error::InvalidArgument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of the current settings.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "expected key = value".into(),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Reads a config file. Relative input paths resolve against the file's
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_file(path)?;
        Ok(cfg)
    }

    /// [`RunConfig::apply`] with the contents of a file; inputs it adds that
    /// are relative resolve against the file's directory.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let before = self.inputs.len();
        self.apply(&fs::read_to_string(path)?)?;
        if let Some(dir) = path.parent() {
            for p in self.inputs[before..].iter_mut() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(())
    }

    pub fn tail_regions(&self) -> Vec<(f64, f64)> {
        match &self.tail_regions {
            Some(r) => r.clone(),
            None => vec![self.period.unwrap_or(Period::II).default_tail_region()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::InvalidArgument("no input files".into()));
        }
        if self.interval <= 0 {
            return Err(Error::InvalidArgument("interval must be positive".into()));
        }
        for (lo, hi) in self.tail_regions() {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::InvalidArgument(format!("bad tail region [{lo}, {hi}]")));
            }
        }
        for &(lo, hi) in &self.acf_regions {
            if lo < 1 || hi <= lo || hi > self.acf_max_lag {
                return Err(Error::InvalidArgument(format!(
                    "bad ACF region [{lo}, {hi}] for max lag {}",
                    self.acf_max_lag
                )));
            }
        }
        if let Some(&lag) = self.jackknife_lags.iter().find(|&&l| l > self.acf_max_lag) {
            return Err(Error::InvalidArgument(format!(
                "jackknife lag {lag} exceeds ACF max lag {}",
                self.acf_max_lag
            )));
        }
        Ok(())
    }
}

/// A stage failure, naming the stage.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl stdfmt::Display for StageError {
    fn fmt(&self, f: &mut stdfmt::Formatter<'_>) -> stdfmt::Result {
        write!(f, "stage {}: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

trait Stage<T> {
    fn stage(self, name: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, name: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage: name, source })
    }
}

/// Tick files merged and sorted, plus the total count of rejected lines.
pub fn load_ticks(paths: &[PathBuf], format: &TickFormat) -> Result<(Vec<TickRecord>, usize)> {
    let mut ticks = Vec::new();
    let mut skipped = 0;
    for path in paths {
        let file = File::open(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        let parsed = match ingest::parse_ticks(BufReader::new(file), format) {
            Err(Error::NoRecords) => continue,
            other => other?,
        };
        skipped += parsed.skipped;
        ticks.extend(parsed.records);
    }
    if ticks.is_empty() {
        return Err(Error::NoRecords);
    }
    ticks.sort_by_key(|t| t.timestamp);
    Ok((ticks, skipped))
}

/// Ticks inside the period's `[begin, end)` bounds.
pub fn filter_period(ticks: &[TickRecord], period: Option<Period>) -> Result<&[TickRecord]> {
    let out = match period {
        None => ticks,
        Some(p) => {
            let (lo, hi) = p.bounds();
            let a = ticks.partition_point(|t| t.timestamp < lo);
            let b = ticks.partition_point(|t| t.timestamp < hi);
            &ticks[a..b]
        }
    };
    if out.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(out)
}

/// Fits of both tails over one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub fitting_region: [f64; 2],
    pub positive: TailFit,
    pub negative: TailFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailResults {
    pub ccdf: [CcdfPoints; 2],
    pub rows: Vec<TailRow>,
    pub hill: Vec<HillEstimate>,
}

/// Hill order-statistic count: 0.1% of the side, at least [`MIN_HILL_K`].
pub fn hill_k(n_side: usize) -> usize {
    (n_side / 1000).max(MIN_HILL_K)
}

/// CCDFs, regression fits per region, and a Hill cross-check per side.
pub fn tail_stage(std_returns: &ReturnSeries, regions: &[(f64, f64)]) -> Result<TailResults> {
    let pos = scaling::ccdf_standardized(std_returns, Side::Positive)?;
    let neg = scaling::ccdf_standardized(std_returns, Side::Negative)?;
    let mut rows = Vec::with_capacity(regions.len());
    for &region in regions {
        rows.push(TailRow {
            fitting_region: [region.0, region.1],
            positive: scaling::fit_tail(&pos, region)?,
            negative: scaling::fit_tail(&neg, region)?,
        });
    }
    let hill = [(&pos, Side::Positive), (&neg, Side::Negative)]
        .into_iter()
        .map(|(c, side)| scaling::hill_estimator(&std_returns.values, side, hill_k(c.n_side)))
        .collect::<Result<_>>()?;
    Ok(TailResults {
        ccdf: [pos, neg],
        rows,
        hill,
    })
}

/// ACF of `|x|` with jackknife errors. `max_lag` is capped at `len - 1`.
pub fn abs_acf_stage(x: &[f64], max_lag: usize, jackknife_lags: &[usize], blocks: usize) -> Result<AcfEstimate> {
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mut a = memory::acf(&abs, max_lag.min(abs.len().saturating_sub(1)))?;
    a.attach_jackknife(&abs, jackknife_lags, blocks)?;
    Ok(a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RvResults {
    pub series: RvSeries,
    pub standardized: StandardizedReturns,
    pub normality: NormalityStats,
    /// Diagnostics of `|R / sqrt(RV)|`.
    pub whiteness: WhitenessReport,
    /// Same diagnostics on the unscaled daily returns.
    pub whiteness_unscaled: WhitenessReport,
    /// ACF of `|R / sqrt(RV)|` to the whiteness lag range.
    pub acf: AcfEstimate,
}

/// Realized volatility from 5-minute bars and diagnostics of the scaled
/// daily returns.
pub fn rv_stage(bars_5min: &BarSeries) -> Result<RvResults> {
    let series = rv::realized_volatility(bars_5min)?;
    let standardized = rv::standardize_by_rv(&series)?;
    let normality = rv::normality_stats(&standardized.values)?;
    let whiteness = rv::whiteness_check(&standardized.values)?;
    let daily: Vec<f64> = series
        .daily_return
        .iter()
        .zip(&series.rv)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&r, _)| r)
        .collect();
    let whiteness_unscaled = rv::whiteness_check(&daily)?;
    let abs: Vec<f64> = standardized.values.iter().map(|v| v.abs()).collect();
    let acf = memory::acf(&abs, whiteness.max_lag)?;
    Ok(RvResults {
        series,
        standardized,
        normality,
        whiteness,
        whiteness_unscaled,
        acf,
    })
}

/// Everything a run computes.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub period: Option<Period>,
    pub n_ticks: usize,
    pub skipped_lines: usize,
    pub bars: BarSeries,
    pub returns: ReturnSeries,
    pub standardized: ReturnSeries,
    pub tails: TailResults,
    pub acf: AcfEstimate,
    pub acf_fits: Vec<AcfPowerLawFit>,
    pub rv: Option<RvResults>,
    pub seed: u64,
}

/// Runs every stage in order. Nothing is written; see [`emit_plotdata`].
pub fn run_pipeline(config: &RunConfig) -> std::result::Result<Report, StageError> {
    config.validate().stage("config")?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))
            .stage("config")?
            .install(|| run_stages(config)),
        None => run_stages(config),
    }
}

fn run_stages(config: &RunConfig) -> std::result::Result<Report, StageError> {
    let (all_ticks, skipped) = load_ticks(&config.inputs, &TickFormat::default()).stage("ingest")?;
    let ticks = filter_period(&all_ticks, config.period).stage("ingest")?;
    let bars = ingest::build_bars_with(ticks, config.interval, None, config.bar_price).stage("ingest")?;

    let returns = returns::log_returns(&bars).stage("returns")?;
    let standardized = returns::standardize(&returns).stage("returns")?;

    let tails = tail_stage(&standardized, &config.tail_regions()).stage("tails")?;

    let acf = abs_acf_stage(
        &standardized.values,
        config.acf_max_lag,
        &config.jackknife_lags,
        config.jackknife_blocks,
    )
    .stage("acf")?;
    let acf_fits = config
        .acf_regions
        .iter()
        .map(|&r| memory::fit_acf_powerlaw(&acf, r))
        .collect::<Result<Vec<_>>>()
        .stage("acf-fit")?;

    let rv = if config.rv {
        let bars_5min =
            ingest::build_bars_with(ticks, rv::RV_INTERVAL, None, config.bar_price).stage("rv")?;
        Some(rv_stage(&bars_5min).stage("rv")?)
    } else {
        None
    };

    Ok(Report {
        period: config.period,
        n_ticks: ticks.len(),
        skipped_lines: skipped,
        bars,
        returns,
        standardized,
        tails,
        acf,
        acf_fits,
        rv,
        seed: config.seed,
    })
}

#[derive(Serialize)]
struct JackknifeRow {
    lag: usize,
    acf: f64,
    sigma: f64,
}

#[derive(Serialize)]
struct RvSummary<'a> {
    n_days: usize,
    excluded_zero_rv: usize,
    normality: &'a NormalityStats,
    whiteness: &'a WhitenessReport,
    whiteness_unscaled: &'a WhitenessReport,
}

#[derive(Serialize)]
struct Summary<'a> {
    period: String,
    interval: i64,
    seed: u64,
    n_ticks: usize,
    skipped_lines: usize,
    n_bars: usize,
    n_filled_bars: usize,
    n_returns: usize,
    return_mean: f64,
    return_sd: f64,
    tail_index: &'a [TailRow],
    hill: &'a [HillEstimate],
    acf_exponent: &'a [AcfPowerLawFit],
    jackknife: Vec<JackknifeRow>,
    rv: Option<RvSummary<'a>>,
}

fn region_tag(lo: f64, hi: f64) -> String {
    format!("{lo}-{hi}")
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes the report bundle into `dir` and returns the file names written,
/// in write order.
///
/// Tables: `bars.csv`, `returns.csv`, `returns_standardized.csv`,
/// `ccdf_{pos,neg}.csv`, `fit_{pos,neg}.csv` (first region, 50 log-spaced
/// points), `acf_abs.csv`, and with RV `rv.csv` and `acf_rv_abs.csv`.
/// JSON: `tailfit_{side}_{lo}-{hi}.json`, `acffit_{lo}-{hi}.json`,
/// `whiteness.json`, `summary.json`.
pub fn emit_plotdata(report: &Report, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut csv = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        let mut w = create(dir, name)?;
        f(&mut w)?;
        written.push(name.to_string());
        Ok(())
    };

    csv("bars.csv", &|w| report.bars.write_csv(w))?;
    csv("returns.csv", &|w| report.returns.write_csv(w))?;
    csv("returns_standardized.csv", &|w| report.standardized.write_csv(w))?;
    for c in &report.tails.ccdf {
        csv(&format!("ccdf_{}.csv", c.side.tag()), &|w| c.write_csv(w))?;
    }
    if let Some(row) = report.tails.rows.first() {
        for fit in [&row.positive, &row.negative] {
            csv(&format!("fit_{}.csv", fit.side.tag()), &|w| fit.write_curve_csv(w, CURVE_POINTS))?;
        }
    }
    csv("acf_abs.csv", &|w| report.acf.write_csv(w))?;
    if let Some(rv) = &report.rv {
        csv("rv.csv", &|w| rv.series.write_csv(w))?;
        csv("acf_rv_abs.csv", &|w| rv.acf.write_csv(w))?;
    }

    for row in &report.tails.rows {
        for fit in [&row.positive, &row.negative] {
            let name = format!("tailfit_{}_{}.json", fit.side.tag(), region_tag(fit.region[0], fit.region[1]));
            write_json(dir, &name, fit)?;
            written.push(name);
        }
    }
    for fit in &report.acf_fits {
        let name = format!("acffit_{}-{}.json", fit.region[0], fit.region[1]);
        write_json(dir, &name, fit)?;
        written.push(name);
    }
    if let Some(rv) = &report.rv {
        write_json(dir, "whiteness.json", &rv.whiteness)?;
        written.push("whiteness.json".into());
    }

    let summary = Summary {
        period: report.period.map_or_else(|| "all".to_string(), |p| p.to_string()),
        interval: report.bars.interval(),
        seed: report.seed,
        n_ticks: report.n_ticks,
        skipped_lines: report.skipped_lines,
        n_bars: report.bars.len(),
        n_filled_bars: report.bars.fill_flags().iter().filter(|&&f| f).count(),
        n_returns: report.returns.len(),
        return_mean: report.standardized.mean_used,
        return_sd: report.standardized.sd_used,
        tail_index: &report.tails.rows,
        hill: &report.tails.hill,
        acf_exponent: &report.acf_fits,
        jackknife: report
            .acf
            .sigma
            .iter()
            .enumerate()
            .filter_map(|(lag, s)| {
                s.map(|sigma| JackknifeRow {
                    lag,
                    acf: report.acf.values[lag],
                    sigma,
                })
            })
            .collect(),
        rv: report.rv.as_ref().map(|rv| RvSummary {
            n_days: rv.series.len(),
            excluded_zero_rv: rv.standardized.excluded_zero_rv,
            normality: &rv.normality,
            whiteness: &rv.whiteness,
            whiteness_unscaled: &rv.whiteness_unscaled,
        }),
    };
    write_json(dir, "summary.json", &summary)?;
    written.push("summary.json".into());
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config_file_text() {
        let cfg = RunConfig::parse(
            "# dataset II\ninput = a.csv, b.csv\ninput=c.csv\nperiod = II\ntail_regions = 2:20, 1:10\n\
             acf_regions = 3:500\njackknife_lags =\nrv = false\nthreads = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.inputs.len(), 3);
        assert_eq!(cfg.period, Some(Period::II));
        assert_eq!(cfg.tail_regions(), vec![(2.0, 20.0), (1.0, 10.0)]);
        assert_eq!(cfg.acf_regions, vec![(3, 500)]);
        assert!(cfg.jackknife_lags.is_empty());
        assert!(!cfg.rv);
        assert_eq!(cfg.threads, Some(2));
        assert_eq!(cfg.interval, 60);
    }

    #[test]
    fn config_errors_name_the_line() {
        let err = RunConfig::parse("interval = 60\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(RunConfig::parse("no equals sign").is_err());
        assert!(RunConfig::parse("tail_regions = 2-20").is_err());
    }

    #[test]
    fn default_regions_follow_period() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.tail_regions(), vec![(2.0, 20.0)]);
        cfg.period = Some(Period::Full);
        assert_eq!(cfg.tail_regions(), vec![(1.0, 10.0)]);
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_err());
        cfg.inputs.push("x.csv".into());
        cfg.validate().unwrap();
        cfg.acf_regions = vec![(3, 20_000)];
        assert!(cfg.validate().is_err());
        cfg.acf_regions = vec![];
        cfg.jackknife_lags = vec![20_000];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stage_error_names_stage() {
        let err = Err::<(), _>(Error::NoRecords).stage("ingest").unwrap_err();
        assert_eq!(err.to_string(), "stage ingest: no records");
    }

    #[test]
    fn period_filter() {
        let t = |ts| TickRecord {
            timestamp: ts,
            price: 1.0,
            volume: 1.0,
        };
        let ticks = [t(0), t(1_420_070_400), t(1_500_000_000)];
        assert_eq!(filter_period(&ticks, Some(Period::II)).unwrap().len(), 2);
        assert!(matches!(filter_period(&ticks, Some(Period::I)), Err(Error::NoRecords)));
        assert_eq!(filter_period(&ticks, None).unwrap().len(), 3);
    }
}
