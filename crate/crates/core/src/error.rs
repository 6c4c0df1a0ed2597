use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("non-finite log density at the starting point ({0})")]
    NonFiniteDensity(f64),

    #[error("tail truncation too short: {0}")]
    Truncation(String),

    #[error("insufficient data in angular band around {omega:.4} rad: {count} pixels (need {required})")]
    InsufficientBandData {
        omega: f64,
        count: usize,
        required: usize,
    },

    #[error("no intersection between ray at {0:.4} rad and shape")]
    NoIntersection(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DegeneratePosterior(_) => "degenerate_posterior",
            Error::EmptyRegion(_) => "empty_region",
            Error::NonFiniteDensity(_) => "non_finite_density",
            Error::Truncation(_) => "truncation",
            Error::InsufficientBandData { .. } => "insufficient_band_data",
            Error::NoIntersection(_) => "no_intersection",
            Error::Parse(_) => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
