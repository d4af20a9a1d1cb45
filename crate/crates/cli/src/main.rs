use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use stylized_facts::ingest::{build_bars_with, BarPrice, BarSeries, TickFormat};
use stylized_facts::memory::fit_acf_powerlaw;
use stylized_facts::pipeline::{
    abs_acf_stage, emit_plotdata, filter_period, load_ticks, run_pipeline, rv_stage, tail_stage, RunConfig,
    CURVE_POINTS,
};
use stylized_facts::returns::{log_returns, standardize, Period, ReturnSeries};
use stylized_facts::synth::{generate, price_bars, ticks_from_bars, Model, SyntheticSpec};
use stylized_facts::{ingest, Result as CoreResult};

const OUT_DIR_ENV: &str = "STYLIZED_OUT_DIR";

/// Stylized facts of high-frequency price series: tails, volatility memory,
/// and realized-volatility scaling.
#[derive(Parser)]
#[command(name = "stylized", version)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse tick CSVs into uniformly spaced bars.
    Ingest(IngestArgs),
    /// Log returns from bars, optionally standardized.
    Returns(ReturnsArgs),
    /// CCDFs and power-law tail fits of standardized returns.
    Tails(TailsArgs),
    /// Absolute-return autocorrelation, jackknife errors and power-law fits.
    Acf(AcfArgs),
    /// Daily realized volatility from 5-minute bars and its diagnostics.
    Rv(RvArgs),
    /// Seeded synthetic returns or ticks.
    Synth(SynthArgs),
    /// Full pipeline from a config file.
    Run(RunArgs),
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BarPriceArg {
    Close,
    Mean,
    Median,
}

impl From<BarPriceArg> for BarPrice {
    fn from(b: BarPriceArg) -> Self {
        match b {
            BarPriceArg::Close => BarPrice::Close,
            BarPriceArg::Mean => BarPrice::Mean,
            BarPriceArg::Median => BarPrice::Median,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Tick files (`unixtime,price,volume`).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Bar length in seconds.
    #[arg(long, default_value_t = 60)]
    interval: i64,
    /// `I`, `II`, `full` or `YYYY-MM-DD..YYYY-MM-DD`.
    #[arg(long)]
    period: Option<Period>,
    #[arg(long, value_enum, default_value = "close")]
    bar_price: BarPriceArg,
    /// Bars CSV to write (default: `<out-dir>/bars.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    dir: OutDir,
}

#[derive(Args)]
struct ReturnsArgs {
    /// Bars CSV to difference.
    #[arg(long, conflicts_with = "returns", required_unless_present = "returns")]
    bars: Option<PathBuf>,
    /// Existing returns CSV (use with `--standardize`).
    #[arg(long)]
    returns: Option<PathBuf>,
    /// Subtract the mean and divide by the sample standard deviation.
    #[arg(long)]
    standardize: bool,
    /// Returns CSV to write (default: `<out-dir>/returns.csv`, or
    /// `returns_standardized.csv` with `--standardize`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    dir: OutDir,
}

#[derive(Args)]
struct SeriesInput {
    /// Returns CSV (`timestamp,return`).
    #[arg(long)]
    returns: PathBuf,
    /// The input is already standardized; otherwise it is standardized here.
    #[arg(long)]
    standardized: bool,
}

#[derive(Args)]
struct TailsArgs {
    #[command(flatten)]
    input: SeriesInput,
    /// Fitting region `lo:hi` in standardized units; repeatable.
    #[arg(long = "region", value_parser = parse_f64_pair)]
    regions: Vec<(f64, f64)>,
    #[command(flatten)]
    dir: OutDir,
}

#[derive(Args)]
struct AcfArgs {
    #[command(flatten)]
    input: SeriesInput,
    #[arg(long, default_value_t = 10_000)]
    max_lag: usize,
    /// Power-law fit region `lo:hi` in lags; repeatable (default 3:500 and 1500:10000).
    #[arg(long = "region", value_parser = parse_usize_pair)]
    regions: Vec<(usize, usize)>,
    /// Skip the power-law fits.
    #[arg(long, conflicts_with = "regions")]
    no_fit: bool,
    /// Lag with a jackknife error; repeatable (default 100 and 1000).
    #[arg(long = "jackknife-lag")]
    jackknife_lags: Vec<usize>,
    /// Skip the jackknife errors.
    #[arg(long, conflicts_with = "jackknife_lags")]
    no_jackknife: bool,
    #[arg(long, default_value_t = 50)]
    blocks: usize,
    #[command(flatten)]
    dir: OutDir,
}

#[derive(Args)]
struct RvArgs {
    /// 300-second bars CSV (`ingest --interval 300`).
    #[arg(long)]
    bars: PathBuf,
    #[command(flatten)]
    dir: OutDir,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gaussian,
    StudentT,
    Pareto,
    Garch,
    Sv,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Student-t degrees of freedom.
    #[arg(long, default_value_t = 3.0)]
    nu: f64,
    /// Pareto tail index.
    #[arg(long, default_value_t = 3.0)]
    mu: f64,
    #[arg(long, default_value_t = 1e-6)]
    omega: f64,
    #[arg(long, default_value_t = 0.09)]
    alpha: f64,
    #[arg(long, default_value_t = 0.90)]
    beta: f64,
    /// SV mean log volatility (default ln 0.001).
    #[arg(long, allow_negative_numbers = true)]
    mu_sigma: Option<f64>,
    /// SV log-volatility persistence (default 0.9999).
    #[arg(long)]
    phi: Option<f64>,
    /// SV log-volatility innovation sd (default 0.6 * sqrt(1 - phi^2)).
    #[arg(long)]
    sigma_eta: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file (default: `<out-dir>/synth.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a tick CSV (one trade per bar) instead of returns.
    #[arg(long)]
    as_ticks: bool,
    /// Multiplier applied to draws before they become log returns.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Unix time of the first bar (default 2015-01-01).
    #[arg(long, default_value_t = 1_420_070_400, allow_negative_numbers = true)]
    start: i64,
    #[arg(long, default_value_t = 60)]
    interval: i64,
    /// Opening price for `--as-ticks`.
    #[arg(long, default_value_t = 100.0)]
    p0: f64,
    #[command(flatten)]
    dir: OutDir,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Extra tick files.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Output directory (default: config `out_dir`, then $STYLIZED_OUT_DIR, then `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let p = |v: &str| v.trim().parse::<T>().map_err(|_| format!("bad number {v:?}"));
    Ok((p(a)?, p(b)?))
}

fn parse_f64_pair(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s)
}

fn parse_usize_pair(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s)
}

fn stage<T>(name: &str, r: CoreResult<T>) -> anyhow::Result<T> {
    r.with_context(|| format!("stage {name}"))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_json(value: &serde_json::Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_series(input: &SeriesInput, name: &str) -> anyhow::Result<ReturnSeries> {
    let raw = stage(name, ReturnSeries::read_csv(open(&input.returns)?))?;
    if input.standardized {
        Ok(ReturnSeries {
            standardized: true,
            ..raw
        })
    } else {
        stage(name, standardize(&raw))
    }
}

fn ingest(a: IngestArgs) -> anyhow::Result<()> {
    let (ticks, skipped) = stage("ingest", load_ticks(&a.input, &TickFormat::default()))?;
    let ticks = stage("ingest", filter_period(&ticks, a.period))?;
    let bars = stage("ingest", build_bars_with(ticks, a.interval, None, a.bar_price.into()))?;
    let out = a.out.unwrap_or_else(|| a.dir.out_dir.join("bars.csv"));
    stage("ingest", bars.write_csv(create(&out)?))?;
    let filled = bars.fill_flags().iter().filter(|&&f| f).count();
    eprintln!(
        "{} ticks ({skipped} lines skipped) -> {} bars ({filled} filled) in {}",
        ticks.len(),
        bars.len(),
        out.display()
    );
    Ok(())
}

fn returns(a: ReturnsArgs) -> anyhow::Result<()> {
    let raw = match (&a.bars, &a.returns) {
        (Some(b), _) => {
            let bars = stage("returns", BarSeries::read_csv(open(b)?))?;
            stage("returns", log_returns(&bars))?
        }
        (None, Some(r)) => stage("returns", ReturnSeries::read_csv(open(r)?))?,
        (None, None) => bail!("one of --bars or --returns is required"),
    };
    let (series, default_name) = if a.standardize {
        (stage("returns", standardize(&raw))?, "returns_standardized.csv")
    } else {
        (raw, "returns.csv")
    };
    let out = a.out.unwrap_or_else(|| a.dir.out_dir.join(default_name));
    stage("returns", series.write_csv(create(&out)?))?;
    print_json(&json!({
        "n_returns": series.len(),
        "return_mean": series.mean_used,
        "return_sd": series.sd_used,
    }))
}

fn tails(a: TailsArgs) -> anyhow::Result<()> {
    let r = read_series(&a.input, "tails")?;
    let regions = if a.regions.is_empty() {
        vec![Period::II.default_tail_region()]
    } else {
        a.regions
    };
    let t = stage("tails", tail_stage(&r, &regions))?;
    let dir = &a.dir.out_dir;
    for c in &t.ccdf {
        stage("tails", c.write_csv(create(&dir.join(format!("ccdf_{}.csv", c.side.tag())))?))?;
    }
    for fit in [&t.rows[0].positive, &t.rows[0].negative] {
        let path = dir.join(format!("fit_{}.csv", fit.side.tag()));
        stage("tails", fit.write_curve_csv(create(&path)?, CURVE_POINTS))?;
    }
    for row in &t.rows {
        for fit in [&row.positive, &row.negative] {
            let name = format!("tailfit_{}_{}-{}.json", fit.side.tag(), fit.region[0], fit.region[1]);
            write_json(&dir.join(name), fit)?;
        }
    }
    print_json(&json!({ "tail_index": t.rows, "hill": t.hill }))
}

fn acf(a: AcfArgs) -> anyhow::Result<()> {
    let defaults = RunConfig::default();
    let regions = match (a.no_fit, a.regions.is_empty()) {
        (true, _) => Vec::new(),
        (false, true) => defaults.acf_regions,
        (false, false) => a.regions,
    };
    let lags = match (a.no_jackknife, a.jackknife_lags.is_empty()) {
        (true, _) => Vec::new(),
        (false, true) => defaults.jackknife_lags,
        (false, false) => a.jackknife_lags,
    };
    let r = read_series(&a.input, "acf")?;
    let est = stage("acf", abs_acf_stage(&r.values, a.max_lag, &lags, a.blocks))?;
    let fits = regions
        .iter()
        .map(|&reg| fit_acf_powerlaw(&est, reg))
        .collect::<CoreResult<Vec<_>>>();
    let fits = stage("acf-fit", fits)?;
    let dir = &a.dir.out_dir;
    stage("acf", est.write_csv(create(&dir.join("acf_abs.csv"))?))?;
    for fit in &fits {
        write_json(&dir.join(format!("acffit_{}-{}.json", fit.region[0], fit.region[1])), fit)?;
    }
    let jackknife: Vec<_> = est
        .sigma
        .iter()
        .enumerate()
        .filter_map(|(lag, s)| s.map(|sigma| json!({ "lag": lag, "acf": est.values[lag], "sigma": sigma })))
        .collect();
    print_json(&json!({ "acf_exponent": fits, "jackknife": jackknife }))
}

fn rv(a: RvArgs) -> anyhow::Result<()> {
    let bars = stage("rv", BarSeries::read_csv(open(&a.bars)?))?;
    let res = stage("rv", rv_stage(&bars))?;
    let dir = &a.dir.out_dir;
    stage("rv", res.series.write_csv(create(&dir.join("rv.csv"))?))?;
    stage("rv", res.acf.write_csv(create(&dir.join("acf_rv_abs.csv"))?))?;
    write_json(&dir.join("whiteness.json"), &res.whiteness)?;
    print_json(&json!({
        "n_days": res.series.len(),
        "excluded_zero_rv": res.standardized.excluded_zero_rv,
        "normality": res.normality,
        "whiteness": res.whiteness,
        "whiteness_unscaled": res.whiteness_unscaled,
    }))
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let model = match a.model {
        ModelArg::Gaussian => Model::Gaussian,
        ModelArg::StudentT => Model::StudentT { nu: a.nu },
        ModelArg::Pareto => Model::Pareto { mu: a.mu },
        ModelArg::Garch => Model::Garch {
            omega: a.omega,
            alpha: a.alpha,
            beta: a.beta,
        },
        ModelArg::Sv => {
            let Model::Sv { mu_sigma, phi, .. } = Model::intraday_sv() else {
                unreachable!()
            };
            let phi = a.phi.unwrap_or(phi);
            Model::Sv {
                mu_sigma: a.mu_sigma.unwrap_or(mu_sigma),
                phi,
                sigma_eta: a.sigma_eta.unwrap_or(0.6 * (1.0 - phi * phi).abs().sqrt()),
            }
        }
    };
    let s = stage("synth", generate(&SyntheticSpec::new(model, a.n, a.seed)))?;
    let out = a.out.unwrap_or_else(|| a.dir.out_dir.join("synth.csv"));
    if a.as_ticks {
        let bars = stage("synth", price_bars(&s.returns, a.scale, a.start, a.interval, a.p0))?;
        stage("synth", ingest::write_ticks(create(&out)?, &ticks_from_bars(&bars)))?;
    } else {
        let values = s.returns.iter().map(|v| v * a.scale).collect();
        let series = ReturnSeries::from_values(values, a.start + a.interval, a.interval);
        stage("synth", series.write_csv(create(&out)?))?;
    }
    eprintln!("{} draws -> {}", a.n, out.display());
    Ok(())
}

fn run(a: RunArgs, threads: Option<usize>) -> anyhow::Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        cfg.out_dir = dir.into();
    }
    if let Some(path) = &a.config {
        cfg.apply_file(path)
            .with_context(|| format!("stage config: {}", path.display()))?;
    }
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("stage config: --set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k, v).context("stage config")?;
    }
    cfg.inputs.extend(a.input);
    if let Some(dir) = a.out_dir {
        cfg.out_dir = dir;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    let report = run_pipeline(&cfg).map_err(|e| anyhow!("{e}"))?;
    let written = emit_plotdata(&report, &cfg.out_dir).context("stage emit")?;
    for name in written {
        println!("{}", cfg.out_dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Returns(a) => returns(a),
        Command::Tails(a) => tails(a),
        Command::Acf(a) => acf(a),
        Command::Rv(a) => rv(a),
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a, cli.threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
