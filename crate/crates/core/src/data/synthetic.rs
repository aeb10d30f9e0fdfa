use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::panel::PanelDataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::statespace::{build_state_space, simulate_forward_from, ComponentSpec, CovarianceSet, SeriesComponents};

/// Settings for a synthetic panel with known coefficients and lag.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_weeks: usize,
    pub first_week: i64,
    /// Structural part; its series count sets `M`.
    pub spec: ComponentSpec,
    pub covariances: CovarianceSet,
    /// Fixed `α(1)`; zeros when `None`.
    pub initial_state: Option<DVector<f64>>,
    /// `M` rows of `d` true coefficients, zero meaning excluded.
    pub beta: Vec<Vec<f64>>,
    pub true_lag: usize,
    /// AR(1) coefficient of the unit-variance predictor processes.
    pub predictor_ar: f64,
    /// Constant added to every series.
    pub baseline: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Local linear trend plus regression, two active predictors per unit.
    pub fn trend_regression(m: usize, d: usize, num_weeks: usize, true_lag: usize, seed: u64) -> Self {
        let comps = SeriesComponents { trend: true, seasonal: false, cycle: false, regression: true, seasons: 0 };
        let spec = ComponentSpec::uniform(m, comps, 0.6, 0.5, 0.0);
        let mut covariances = CovarianceSet::isotropic(&spec, 0.0, 0.25);
        covariances.level = DMatrix::from_fn(m, m, |a, b| if a == b { 0.04 } else { 0.01 });
        covariances.slope = DMatrix::identity(m, m) * 1e-4;
        covariances.observation = DMatrix::from_fn(m, m, |a, b| if a == b { 0.25 } else { 0.1 });
        let beta = (0..m)
            .map(|s| (0..d).map(|j| match (j + s) % d.max(1) {
                0 => 3.0,
                1 => -2.0,
                _ => 0.0,
            }).collect())
            .collect();
        Self {
            num_weeks,
            first_week: 1,
            spec,
            covariances,
            initial_state: None,
            beta,
            true_lag,
            predictor_ar: 0.5,
            baseline: 50.0,
            seed,
        }
    }

    pub fn num_series(&self) -> usize {
        self.spec.num_series()
    }

    pub fn num_predictors(&self) -> usize {
        self.beta.first().map_or(0, Vec::len)
    }
}

/// The generating values behind a synthetic panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub units: Vec<String>,
    pub predictor_names: Vec<String>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<bool>>,
    pub true_lag: usize,
    pub baseline: f64,
    pub seed: u64,
    /// `T × M` structural signal without noise or regression, row-major.
    pub structural: Vec<Vec<f64>>,
}

/// Simulate a panel with `y(t) = baseline + Zα(t) + ε(t) + βᵀx(t − lag)`.
///
/// Predictors are independent stationary AR(1) series with unit variance;
/// `lag` pre-sample rows are generated and dropped so every `y(t)` has a
/// driving row.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<(PanelDataset, SyntheticTruth)> {
    let m = cfg.num_series();
    let d = cfg.num_predictors();
    if cfg.beta.len() != m || cfg.beta.iter().any(|b| b.len() != d) {
        return Err(Error::dim(format!("beta must be {m} rows of equal length")));
    }
    if cfg.num_weeks == 0 {
        return Err(Error::config("synthetic panel needs at least one week"));
    }
    if !(cfg.predictor_ar.abs() < 1.0) {
        return Err(Error::config(format!("predictor_ar must lie in (-1, 1), got {}", cfg.predictor_ar)));
    }
    let model = build_state_space(&cfg.spec, &cfg.covariances)?;
    let initial = match &cfg.initial_state {
        Some(a) if a.len() != model.state_dim() => {
            return Err(Error::dim(format!("initial_state has {} entries, state has {}", a.len(), model.state_dim())))
        }
        Some(a) => a.clone(),
        None => DVector::zeros(model.state_dim()),
    };
    let t = cfg.num_weeks;
    let path = simulate_forward_from(&model, &initial, t, derive_seed(cfg.seed, &[0]));

    let total = t + cfg.true_lag;
    let innov_sd = (1.0 - cfg.predictor_ar * cfg.predictor_ar).sqrt();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[1]));
    let full: Vec<DMatrix<f64>> = (0..m)
        .map(|_| {
            let mut x = DMatrix::zeros(total, d);
            for j in 0..d {
                let mut v: f64 = StandardNormal.sample(&mut rng);
                for r in 0..total {
                    x[(r, j)] = v;
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v = cfg.predictor_ar * v + innov_sd * e;
                }
            }
            x
        })
        .collect();

    let mut y = path.observations.clone();
    let mut structural = vec![vec![0.0; m]; t];
    for r in 0..t {
        let signal = &model.observation * &path.states[r];
        for s in 0..m {
            structural[r][s] = signal[s];
            let driving = full[s].row(r).transpose();
            let effect: f64 = cfg.beta[s].iter().zip(driving.iter()).map(|(b, x)| b * x).sum();
            y[(r, s)] += cfg.baseline + effect;
        }
    }
    let x: Vec<DMatrix<f64>> = full.iter().map(|f| f.rows(cfg.true_lag, t).into_owned()).collect();

    let width = (m.max(1) as f64).log10() as usize + 1;
    let units: Vec<String> = (1..=m).map(|i| format!("U{i:0width$}")).collect();
    let predictor_names: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    let panel = PanelDataset::new(units.clone(), cfg.first_week, predictor_names.clone(), y, x)?;
    let truth = SyntheticTruth {
        units,
        predictor_names,
        gamma: cfg.beta.iter().map(|b| b.iter().map(|v| *v != 0.0).collect()).collect(),
        beta: cfg.beta.clone(),
        true_lag: cfg.true_lag,
        baseline: cfg.baseline,
        seed: cfg.seed,
        structural,
    };
    Ok((panel, truth))
}
