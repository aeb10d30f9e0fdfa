use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} is not positive semi-definite")]
    NotPsd { what: String },

    #[error("{what} is not positive definite")]
    NotPd { what: String },

    #[error("singular innovation covariance at t={t}")]
    SingularInnovation { t: usize },

    #[error("chain diverged at iteration {iteration}: {what} is not finite")]
    Divergence { iteration: usize, what: String },

    #[error("segment [{start}, {end}] is too short for lag {lag}")]
    SegmentTooShort { start: i64, end: i64, lag: usize },

    #[error("segment [{start}, {end}] lies outside the panel weeks [{min}, {max}]")]
    SegmentOutOfRange { start: i64, end: i64, min: i64, max: i64 },

    #[error("normalized error undefined for segment {segment}: largest truth {max} is not positive")]
    NonPositiveNormalizer { segment: String, max: f64 },

    #[error("empty {0}")]
    Empty(String),

    #[error("panel validation failed: {0}")]
    Validation(String),

    #[error("join failed: {0}")]
    Join(String),

    #[error("unknown source '{name}' (valid sources: {valid})")]
    UnknownSource { name: String, valid: String },

    #[error("integrity check failed for {path}: expected sha256 {expected}, found {found}")]
    Integrity { path: PathBuf, expected: String, found: String },

    #[error("network failure fetching {url}: {message}")]
    Network { url: String, message: String },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse { context: context.into(), message: message.to_string() }
    }

    /// Short stable identifier, used by the CLI for machine-parsable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Dimension(_) => "dimension",
            Error::NotPsd { .. } => "not_psd",
            Error::NotPd { .. } => "not_pd",
            Error::SingularInnovation { .. } => "singular_innovation",
            Error::Divergence { .. } => "divergence",
            Error::SegmentTooShort { .. } => "segment_too_short",
            Error::SegmentOutOfRange { .. } => "segment_out_of_range",
            Error::NonPositiveNormalizer { .. } => "non_positive_normalizer",
            Error::Empty(_) => "empty",
            Error::Validation(_) => "validation",
            Error::Join(_) => "join",
            Error::UnknownSource { .. } => "unknown_source",
            Error::Integrity { .. } => "integrity",
            Error::Network { .. } => "network",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
