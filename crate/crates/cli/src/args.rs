use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mbsts", version, about = "Multivariate Bayesian structural time series with time-lagged predictors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a panel CSV from the public sources or generate a synthetic one.
    Prepare(PrepareArgs),
    /// Grid-search the hyper-parameters and lags over the segments.
    Tune(TuneArgs),
    /// Fit one hyper-parameter setting and export coefficients and predictions.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// TOML or JSON file with default values for any of the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Generate a synthetic panel instead of downloading data.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long = "M", value_name = "UNITS")]
    pub units: Option<usize>,
    #[arg(long = "d", value_name = "PREDICTORS")]
    pub predictors: Option<usize>,
    #[arg(long = "T", value_name = "WEEKS")]
    pub weeks: Option<usize>,
    #[arg(long)]
    pub true_lag: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ground-truth JSON path (default: next to the panel).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub sources: Option<Vec<String>>,
    /// Weekly (`unit,week,...`) or daily (`unit,date,...`) index file.
    #[arg(long)]
    pub indices: Option<PathBuf>,
    /// `unit,population` table.
    #[arg(long)]
    pub population: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Re-download cached sources and compare hashes.
    #[arg(long)]
    pub refresh: bool,
}

/// Model and chain flags shared by `tune` and `fit`.
#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// Comma-separated subset of trend,seasonal,cycle,regression.
    #[arg(long, value_delimiter = ',')]
    pub components: Option<Vec<String>>,
    #[arg(long)]
    pub long_term_slope: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thinning: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Credible level of reported intervals.
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub inclusion_prob: Option<f64>,
    #[arg(long)]
    pub expected_model_size: Option<f64>,
    #[arg(long)]
    pub slab_scale_factor: Option<f64>,
    #[arg(long)]
    pub iw_extra_dof: Option<f64>,
    #[arg(long)]
    pub iw_scale_factor: Option<f64>,
    /// Worker threads for concurrent fits.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// `start:end` list, e.g. 9:22,23:37,38:53.
    #[arg(long)]
    pub segments: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    #[arg(long = "grid-rho")]
    pub grid_rho: Option<String>,
    #[arg(long = "grid-S")]
    pub grid_seasons: Option<String>,
    #[arg(long = "grid-varrho")]
    pub grid_varrho: Option<String>,
    /// Accepts `pi` and `pi/N`.
    #[arg(long = "grid-lambda")]
    pub grid_lambda: Option<String>,
    /// Also run the univariate baseline.
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub segments: Option<String>,
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long = "S")]
    pub seasons: Option<usize>,
    #[arg(long)]
    pub varrho: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// Take missing hyper-parameters (and the lag) from a `tune` output directory.
    #[arg(long)]
    pub from_tune: Option<PathBuf>,
    /// Also write the largest-|coefficient| predictor per unit and segment.
    #[arg(long)]
    pub dominant: bool,
    /// Also write every kept draw per segment.
    #[arg(long)]
    pub dump_draws: bool,
    /// Fit independent univariate models instead of the joint one.
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}
