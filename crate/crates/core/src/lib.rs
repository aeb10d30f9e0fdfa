//! Multivariate Bayesian structural time series with time-lagged predictors.
//!
//! Target series are modelled as the sum of trend, seasonal, cycle and
//! regression components with correlated errors across series. Inference is a
//! Gibbs sampler combining a simulation smoother for the latent states,
//! inverse-Wishart covariance draws and spike-and-slab predictor selection.
//! On top of that sits the segmented, lag-aligned training and grid-search
//! tuning protocol in [`mbsts_tl`].

pub mod data;
pub mod error;
pub mod linalg;
pub mod mbsts_tl;
pub mod priors;
pub mod rng;
pub mod sampler;
pub mod statespace;

pub use error::{Error, Result};
pub use statespace::{
    build_state_space, kalman_filter, kalman_smoother, simulate_forward, simulate_states, ComponentSpec,
    CovarianceSet, SeriesComponents, StateSpaceModel,
};
