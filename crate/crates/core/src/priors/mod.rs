//! Prior building blocks: inverse-Wishart covariance draws and the
//! spike-and-slab regression prior.

mod spike_slab;
mod wishart;

pub use spike_slab::{IndicatorVector, RegressionDraw, RegressionProblem, SpikeSlabPrior, RIDGE_JITTER};
pub use wishart::{draw_inverse_wishart, InverseWishartPrior};
