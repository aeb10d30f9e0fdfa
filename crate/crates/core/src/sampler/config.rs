use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chain settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub thinning: usize,
    /// Keep every kept draw's full state path; otherwise only its final state.
    pub keep_paths: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { iterations: 2000, burn_in: 500, seed: 0, thinning: 1, keep_paths: true }
    }
}

impl McmcConfig {
    pub fn new(iterations: usize, burn_in: usize, seed: u64) -> Self {
        Self { iterations, burn_in, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::config("thinning must be at least 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn kept_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thinning
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Hyper-parameters from which data-dependent priors are built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    /// Prior inclusion probability per predictor.
    pub inclusion_prob: f64,
    /// When set, overrides `inclusion_prob` with `expected_model_size / d`.
    pub expected_model_size: Option<f64>,
    /// Slab scale as a multiple of the target series' sample variance.
    pub slab_scale_factor: f64,
    /// Inverse-Wishart dof is `dim + iw_extra_dof`.
    pub iw_extra_dof: f64,
    /// Inverse-Wishart scale is this factor times `diag(sample variances)`.
    pub iw_scale_factor: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            inclusion_prob: 0.5,
            expected_model_size: None,
            slab_scale_factor: 1.0,
            iw_extra_dof: 2.0,
            iw_scale_factor: 0.01,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kept_draw_count() {
        assert_eq!(McmcConfig::default().kept_draws(), 1500);
        let c = McmcConfig { iterations: 100, burn_in: 10, thinning: 3, ..Default::default() };
        assert_eq!(c.kept_draws(), 30);
        assert!(McmcConfig::new(10, 10, 0).validate().is_err());
        assert!(McmcConfig { thinning: 0, ..Default::default() }.validate().is_err());
    }
}
