use nalgebra::{DMatrix, DVector};

use super::config::PriorConfig;
use crate::error::{Error, Result};
use crate::priors::{InverseWishartPrior, SpikeSlabPrior};
use crate::statespace::{ComponentSpec, ShockKind};

/// Every prior the Gibbs sampler needs for one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPriors {
    /// One per series over its `d` predictors (intercepts are added by the
    /// sampler, not here).
    pub spike_slab: Vec<SpikeSlabPrior>,
    pub observation: InverseWishartPrior,
    pub level: InverseWishartPrior,
    pub slope: InverseWishartPrior,
    pub seasonal: InverseWishartPrior,
    pub cycle: InverseWishartPrior,
}

impl ModelPriors {
    pub fn component(&self, kind: ShockKind) -> &InverseWishartPrior {
        match kind {
            ShockKind::Level => &self.level,
            ShockKind::Slope => &self.slope,
            ShockKind::Seasonal => &self.seasonal,
            ShockKind::Cycle => &self.cycle,
        }
    }

    /// Weakly informative defaults scaled to the training targets:
    /// `IW(dim + 2, 0.01 · diag(var y))` for every covariance and a slab scale
    /// of `var y_m` per series.
    pub fn from_data(spec: &ComponentSpec, y: &DMatrix<f64>, num_predictors: usize, cfg: &PriorConfig) -> Result<Self> {
        let m = spec.num_series();
        if y.ncols() != m {
            return Err(Error::dim(format!("targets have {} columns for {m} series", y.ncols())));
        }
        let variances = DVector::from_iterator(m, (0..m).map(|j| robust_variance(y.column(j).as_slice())));
        let iw = |series: &[usize]| -> Result<InverseWishartPrior> {
            let k = series.len();
            let diag = DVector::from_iterator(k, series.iter().map(|&s| cfg.iw_scale_factor * variances[s]));
            InverseWishartPrior::new(k as f64 + cfg.iw_extra_dof, DMatrix::from_diagonal(&diag))
        };
        let all: Vec<usize> = (0..m).collect();
        let pi = match cfg.expected_model_size {
            Some(k) if num_predictors > 0 => k / num_predictors as f64,
            _ => cfg.inclusion_prob,
        };
        let spike_slab = (0..m)
            .map(|s| {
                let d = if spec.series[s].regression { num_predictors } else { 0 };
                SpikeSlabPrior::uniform(d, pi, cfg.slab_scale_factor * variances[s])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spike_slab,
            observation: iw(&all)?,
            level: iw(&spec.indices(|s| s.trend))?,
            slope: iw(&spec.indices(|s| s.trend))?,
            seasonal: iw(&spec.indices(|s| s.seasonal))?,
            cycle: iw(&spec.indices(|s| s.cycle))?,
        })
    }
}

/// Sample variance, with a small positive floor for (near-)constant series so
/// that scale matrices stay positive definite.
pub(crate) fn robust_variance(values: &[f64]) -> f64 {
    let n = values.len();
    let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
    let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    let floor = 1e-4 * mean.powi(2).max(1.0);
    if var > floor {
        var
    } else {
        floor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::SeriesComponents;

    #[test]
    fn constant_series_gets_positive_floor() {
        assert_eq!(robust_variance(&[0.0; 5]), 1e-4);
        assert_eq!(robust_variance(&[50.0; 5]), 0.25);
        assert!((robust_variance(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimensions_follow_component_spec() {
        let mut spec = ComponentSpec::uniform(3, SeriesComponents::all(4), 0.5, 0.5, 0.0);
        spec.series[1].seasonal = false;
        spec.series[2].regression = false;
        let y = DMatrix::from_fn(10, 3, |i, j| (i * (j + 1)) as f64);
        let p = ModelPriors::from_data(&spec, &y, 7, &PriorConfig::default()).unwrap();
        assert_eq!(p.seasonal.dim(), 2);
        assert_eq!(p.observation.dim(), 3);
        assert_eq!(p.observation.dof, 5.0);
        assert_eq!(p.spike_slab[2].len(), 0);
        assert_eq!(p.spike_slab[0].len(), 7);
        let cfg = PriorConfig { expected_model_size: Some(2.0), ..Default::default() };
        let p = ModelPriors::from_data(&spec, &y, 8, &cfg).unwrap();
        assert_eq!(p.spike_slab[0].inclusion_prob[0], 0.25);
    }
}
