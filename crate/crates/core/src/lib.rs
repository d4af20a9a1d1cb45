//! Stylized-fact analysis of high-frequency price data.
//!
//! The crate turns raw trade prints into uniformly spaced bars, computes log
//! returns, and measures three regularities of the resulting series:
//!
//! * power-law tails of the cumulative return distribution ([`scaling`]),
//! * slowly decaying autocorrelation of absolute returns ([`memory`]),
//! * conditional normality of returns scaled by realized volatility ([`rv`]).
//!
//! Every estimator is checked against seeded synthetic processes with known
//! tail and memory properties ([`synth`]). [`pipeline`] wires the stages
//! together and writes the plot-data bundle.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ingest;
pub mod memory;
pub mod pipeline;
pub mod returns;
pub mod rv;
pub mod scaling;
pub mod synth;

mod fmt;
mod regress;
mod stats;

pub use error::{Error, Result};
pub use ingest::{build_bars, parse_ticks, BarPrice, BarSeries, ParsedTicks, TickFormat, TickRecord};
pub use memory::{acf, fit_acf_powerlaw, jackknife_sigma, AcfEstimate, AcfPowerLawFit};
pub use returns::{log_returns, standardize, Period, ReturnSeries};
pub use rv::{
    normality_stats, realized_volatility, standardize_by_rv, whiteness_check, NormalityStats,
    RvSeries, StandardizedReturns, WhitenessReport,
};
pub use scaling::{ccdf, ccdf_standardized, fit_tail, hill_estimator, CcdfPoints, Side, TailFit};
pub use synth::{generate, Model, Synthetic, SyntheticSpec};
