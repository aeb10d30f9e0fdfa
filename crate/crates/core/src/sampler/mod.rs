//! Gibbs sampler for the multivariate structural model.

mod chain;
mod config;
mod dump;
mod priors;
mod summary;

pub use chain::{run_mcmc, Draw, PosteriorDraws, TrainingData};
pub use config::{McmcConfig, PriorConfig};
pub use dump::write_draws_csv;
pub use priors::ModelPriors;
pub use summary::{central_interval, coefficient_summary, one_step_forecast, quantile_sorted, CoefficientSummary, Forecast};
