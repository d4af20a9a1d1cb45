use thiserror::Error;

use crate::scaling::Side;

/// Errors produced by the analysis stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no records")]
    NoRecords,

    #[error("need at least {required} bars, got {found}")]
    TooFewBars { found: usize, required: usize },

    #[error("requested range lies outside the tick span")]
    RangeOutsideData,

    #[error("degenerate series")]
    DegenerateSeries,

    #[error("zero variance")]
    ZeroVariance,

    #[error("series is not standardized")]
    NotStandardized,

    #[error("{side} side has {found} observations, need at least {required}")]
    TooFewObservations {
        side: Side,
        found: usize,
        required: usize,
    },

    #[error("{found} points in fitting region, need at least 3")]
    TooFewPoints { found: usize },

    #[error("no spread in regressor over fitting region")]
    NoRegressorSpread,

    #[error("tied tail magnitudes, Hill denominator is zero")]
    TiedTail,

    #[error("blocks too short for lag: block length {block_len}, lag {lag}")]
    BlocksTooShort { block_len: usize, lag: usize },

    #[error("ACF not positive in region (lag {lag})")]
    AcfNotPositive { lag: usize },

    #[error("expected {expected}-second bars, got {found}")]
    WrongInterval { expected: i64, found: i64 },

    #[error("no complete day in range")]
    NoCompleteDay,

    #[error("every day has zero realized volatility")]
    AllZeroRv,

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
