use nalgebra::{DMatrix, DVector};

use super::spec::{ComponentSpec, CovarianceSet, ShockKind};
use crate::error::{Error, Result};
use crate::linalg::{check_psd, cholesky, is_symmetric, symmetrize};

/// Approximate-diffuse prior variance for the first state.
pub const DIFFUSE_VARIANCE: f64 = 1e6;

/// Where each component of each series lives in the stacked state, and which
/// shock slot drives it.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    pub num_series: usize,
    /// Series carrying a trend, in order; `level[i]`/`slope[i]` are their slots.
    pub trend_series: Vec<usize>,
    pub level: Vec<usize>,
    pub slope: Vec<usize>,
    /// Series carrying a seasonal block; `seasonal[i]` is the first slot of
    /// its `S_m − 1` consecutive slots, `seasonal_len[i] = S_m − 1`.
    pub seasonal_series: Vec<usize>,
    pub seasonal: Vec<usize>,
    pub seasonal_len: Vec<usize>,
    pub cycle_series: Vec<usize>,
    pub cycle: Vec<usize>,
    pub cycle_star: Vec<usize>,
    pub state_dim: usize,
}

impl StateLayout {
    pub fn new(spec: &ComponentSpec) -> Self {
        let trend_series = spec.indices(|s| s.trend);
        let seasonal_series = spec.indices(|s| s.seasonal);
        let cycle_series = spec.indices(|s| s.cycle);
        let kt = trend_series.len();
        let mut next = 0;
        let level: Vec<usize> = (next..next + kt).collect();
        next += kt;
        let slope: Vec<usize> = (next..next + kt).collect();
        next += kt;
        let mut seasonal = Vec::new();
        let mut seasonal_len = Vec::new();
        for &m in &seasonal_series {
            let len = spec.series[m].seasons - 1;
            seasonal.push(next);
            seasonal_len.push(len);
            next += len;
        }
        let kc = cycle_series.len();
        let cycle: Vec<usize> = (next..next + kc).collect();
        next += kc;
        let cycle_star: Vec<usize> = (next..next + kc).collect();
        next += kc;
        Self {
            num_series: spec.num_series(),
            trend_series,
            level,
            slope,
            seasonal_series,
            seasonal,
            seasonal_len,
            cycle_series,
            cycle,
            cycle_star,
            state_dim: next,
        }
    }

    /// Shock ordering: `[ũ, ṽ, w̃, κ̃, κ̃*]`. Returns `(kind, state slot)` per shock.
    pub fn shocks(&self) -> Vec<(ShockKind, usize)> {
        let mut out = Vec::new();
        out.extend(self.level.iter().map(|&s| (ShockKind::Level, s)));
        out.extend(self.slope.iter().map(|&s| (ShockKind::Slope, s)));
        out.extend(self.seasonal.iter().map(|&s| (ShockKind::Seasonal, s)));
        out.extend(self.cycle.iter().map(|&s| (ShockKind::Cycle, s)));
        out.extend(self.cycle_star.iter().map(|&s| (ShockKind::Cycle, s)));
        out
    }

    pub fn shock_dim(&self) -> usize {
        2 * self.level.len() + self.seasonal.len() + 2 * self.cycle.len()
    }

    /// Shock slots belonging to `kind`, grouped so that each group is one
    /// independent draw from the component covariance (two groups for the
    /// cycle: `κ̃` and `κ̃*`).
    pub fn shock_groups(&self, kind: ShockKind) -> Vec<Vec<usize>> {
        let kt = self.level.len();
        let ks = self.seasonal.len();
        let kc = self.cycle.len();
        match kind {
            ShockKind::Level => vec![(0..kt).collect()],
            ShockKind::Slope => vec![(kt..2 * kt).collect()],
            ShockKind::Seasonal => vec![(2 * kt..2 * kt + ks).collect()],
            ShockKind::Cycle => {
                let base = 2 * kt + ks;
                vec![(base..base + kc).collect(), (base + kc..base + 2 * kc).collect()]
            }
        }
    }

    /// Observation contribution `(μ + τ + ω)_m` of a state vector.
    pub fn component_sum(&self, state: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.num_series);
        for (i, &m) in self.trend_series.iter().enumerate() {
            out[m] += state[self.level[i]];
        }
        for (i, &m) in self.seasonal_series.iter().enumerate() {
            out[m] += state[self.seasonal[i]];
        }
        for (i, &m) in self.cycle_series.iter().enumerate() {
            out[m] += state[self.cycle[i]];
        }
        out
    }
}

/// Linear-Gaussian state-space system
///
/// ```text
/// y(t)   = Z α(t) + ε(t),                 ε ~ N(0, H)
/// α(t+1) = T α(t) + c + R η(t),           η ~ N(0, Q)
/// α(1)   ~ N(a₁, P₁)
/// ```
///
/// `c` carries the slope drift `D̃(1 − ρ̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub transition: DMatrix<f64>,
    pub state_intercept: DVector<f64>,
    pub observation: DMatrix<f64>,
    pub selector: DMatrix<f64>,
    pub shock_cov: DMatrix<f64>,
    pub obs_cov: DMatrix<f64>,
    pub initial_mean: DVector<f64>,
    pub initial_cov: DMatrix<f64>,
    /// `R Q Rᵀ`, cached.
    pub state_cov: DMatrix<f64>,
    pub layout: Option<StateLayout>,
}

impl StateSpaceModel {
    /// Generic constructor with validation of shapes and covariance properties.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        transition: DMatrix<f64>,
        state_intercept: DVector<f64>,
        observation: DMatrix<f64>,
        selector: DMatrix<f64>,
        shock_cov: DMatrix<f64>,
        obs_cov: DMatrix<f64>,
        initial_mean: DVector<f64>,
        initial_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let n = transition.nrows();
        if !transition.is_square() {
            return Err(Error::dim("transition must be square"));
        }
        if state_intercept.len() != n || initial_mean.len() != n {
            return Err(Error::dim("state intercept and initial mean must have length state_dim"));
        }
        if observation.ncols() != n {
            return Err(Error::dim("observation matrix must have state_dim columns"));
        }
        let p = observation.nrows();
        if p == 0 {
            return Err(Error::dim("observation dimension must be positive"));
        }
        if obs_cov.nrows() != p || obs_cov.ncols() != p {
            return Err(Error::dim("observation covariance must be M x M"));
        }
        if selector.nrows() != n || selector.ncols() != shock_cov.nrows() || !shock_cov.is_square() {
            return Err(Error::dim("selector must be state_dim x shock_dim with square shock covariance"));
        }
        if initial_cov.nrows() != n || initial_cov.ncols() != n {
            return Err(Error::dim("initial covariance must be state_dim x state_dim"));
        }
        check_psd(&shock_cov, "state shock covariance")?;
        check_psd(&obs_cov, "observation covariance")?;
        if n > 0 {
            if !is_symmetric(&initial_cov, 1e-10) {
                return Err(Error::NotPd { what: "initial state covariance".into() });
            }
            cholesky(&initial_cov, "initial state covariance")?;
        }
        let mut state_cov = &selector * &shock_cov * selector.transpose();
        symmetrize(&mut state_cov);
        Ok(Self {
            transition,
            state_intercept,
            observation,
            selector,
            shock_cov,
            obs_cov,
            initial_mean,
            initial_cov,
            state_cov,
            layout: None,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.observation.nrows()
    }

    pub fn with_initial(mut self, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = self.state_dim();
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::dim("initial prior must match state_dim"));
        }
        if n > 0 {
            cholesky(&cov, "initial state covariance")?;
        }
        self.initial_mean = mean;
        self.initial_cov = cov;
        Ok(self)
    }

    /// Replace the observation covariance.
    pub fn with_obs_cov(mut self, obs_cov: DMatrix<f64>) -> Result<Self> {
        if obs_cov.nrows() != self.obs_dim() || obs_cov.ncols() != self.obs_dim() {
            return Err(Error::dim("observation covariance must be M x M"));
        }
        check_psd(&obs_cov, "observation covariance")?;
        self.obs_cov = obs_cov;
        Ok(self)
    }
}

/// Stack the trend, seasonal and cycle blocks of every series into one system.
///
/// Regression effects are not part of the state; callers subtract `βᵀX(t)`
/// from the observations before filtering.
pub fn build_state_space(spec: &ComponentSpec, covariances: &CovarianceSet) -> Result<StateSpaceModel> {
    spec.validate()?;
    let layout = StateLayout::new(spec);
    let m = spec.num_series();
    let n = layout.state_dim;

    let expect = |mat: &DMatrix<f64>, k: usize, what: &str| -> Result<()> {
        if mat.nrows() != k || mat.ncols() != k {
            return Err(Error::dim(format!("{what} covariance must be {k} x {k}, got {} x {}", mat.nrows(), mat.ncols())));
        }
        check_psd(mat, &format!("{what} covariance"))
    };
    let kt = layout.trend_series.len();
    expect(&covariances.level, kt, "level")?;
    expect(&covariances.slope, kt, "slope")?;
    expect(&covariances.seasonal, layout.seasonal_series.len(), "seasonal")?;
    expect(&covariances.cycle, layout.cycle_series.len(), "cycle")?;
    expect(&covariances.observation, m, "observation")?;

    let mut transition = DMatrix::zeros(n, n);
    let mut intercept = DVector::zeros(n);
    let mut observation = DMatrix::zeros(m, n);

    for (i, &series) in layout.trend_series.iter().enumerate() {
        let (lv, sl) = (layout.level[i], layout.slope[i]);
        transition[(lv, lv)] = 1.0;
        transition[(lv, sl)] = 1.0;
        transition[(sl, sl)] = spec.rho;
        intercept[sl] = spec.long_term_slope[series] * (1.0 - spec.rho);
        observation[(series, lv)] = 1.0;
    }
    for (i, &series) in layout.seasonal_series.iter().enumerate() {
        let start = layout.seasonal[i];
        let len = layout.seasonal_len[i];
        for k in 0..len {
            transition[(start, start + k)] = -1.0;
        }
        for k in 1..len {
            transition[(start + k, start + k - 1)] = 1.0;
        }
        observation[(series, start)] = 1.0;
    }
    let (s, c) = spec.frequency.sin_cos();
    let (rs, rc) = (spec.damping * s, spec.damping * c);
    for (i, &series) in layout.cycle_series.iter().enumerate() {
        let (w, ws) = (layout.cycle[i], layout.cycle_star[i]);
        transition[(w, w)] = rc;
        transition[(w, ws)] = rs;
        transition[(ws, w)] = -rs;
        transition[(ws, ws)] = rc;
        observation[(series, w)] = 1.0;
    }

    let shocks = layout.shocks();
    let q = shocks.len();
    let mut selector = DMatrix::zeros(n, q);
    for (j, &(_, slot)) in shocks.iter().enumerate() {
        selector[(slot, j)] = 1.0;
    }
    let mut shock_cov = DMatrix::zeros(q, q);
    for kind in ShockKind::ALL {
        let cov = covariances.get(kind);
        for group in layout.shock_groups(kind) {
            for (a, &ja) in group.iter().enumerate() {
                for (b, &jb) in group.iter().enumerate() {
                    shock_cov[(ja, jb)] = cov[(a, b)];
                }
            }
        }
    }

    let mut model = StateSpaceModel::new(
        transition,
        intercept,
        observation,
        selector,
        shock_cov,
        covariances.observation.clone(),
        DVector::zeros(n),
        DMatrix::identity(n, n) * DIFFUSE_VARIANCE,
    )?;
    model.layout = Some(layout);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::statespace::spec::SeriesComponents;

    fn only(trend: bool, seasonal: bool, cycle: bool, seasons: usize) -> SeriesComponents {
        SeriesComponents { trend, seasonal, cycle, regression: false, seasons }
    }

    fn step(model: &StateSpaceModel, state: &[f64]) -> DVector<f64> {
        &model.transition * DVector::from_column_slice(state) + &model.state_intercept
    }

    #[test]
    fn noise_free_trend_step() {
        let spec = ComponentSpec::uniform(1, only(true, false, false, 2), 1.0, 0.5, 0.0);
        let model = build_state_space(&spec, &CovarianceSet::zeros(&spec)).unwrap();
        let next = step(&model, &[2.0, 0.5]);
        assert_eq!(next.as_slice(), &[2.5, 0.5]);
    }

    #[test]
    fn slope_reverts_towards_long_term_value() {
        let mut spec = ComponentSpec::uniform(1, only(true, false, false, 2), 0.5, 0.5, 0.0);
        spec.long_term_slope = vec![1.0];
        let model = build_state_space(&spec, &CovarianceSet::zeros(&spec)).unwrap();
        // δ(t+1) = 1 + 0.5 (3 − 1) = 2
        let next = step(&model, &[0.0, 3.0]);
        assert!((next[1] - 2.0).abs() < 1e-15);
        assert!((next[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn noise_free_seasonal_step() {
        let spec = ComponentSpec::uniform(1, only(false, true, false, 4), 0.5, 0.5, 0.0);
        let model = build_state_space(&spec, &CovarianceSet::zeros(&spec)).unwrap();
        assert_eq!(model.state_dim(), 3);
        let next = step(&model, &[1.0, -2.0, 0.5]);
        assert_eq!(next.as_slice(), &[0.5, 1.0, -2.0]);
    }

    #[test]
    fn noise_free_cycle_step() {
        let spec = ComponentSpec::uniform(1, only(false, false, true, 2), 0.5, 0.5, PI / 2.0);
        let model = build_state_space(&spec, &CovarianceSet::zeros(&spec)).unwrap();
        let next = step(&model, &[1.0, 0.0]);
        assert!(next[0].abs() < 1e-15);
        assert!((next[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_frequency_cycle_is_two_decoupled_ar1() {
        let spec = ComponentSpec::uniform(1, only(false, false, true, 2), 0.5, 0.7, 0.0);
        let model = build_state_space(&spec, &CovarianceSet::zeros(&spec)).unwrap();
        assert_eq!(model.transition, DMatrix::identity(2, 2) * 0.7);
    }

    #[test]
    fn seasonal_window_sums_to_zero() {
        for seasons in 2..9 {
            let spec = ComponentSpec::uniform(1, only(false, true, false, seasons), 0.5, 0.5, 0.0);
            let model = build_state_space(&spec, &CovarianceSet::zeros(&spec)).unwrap();
            let mut state = DVector::from_fn(seasons - 1, |i, _| (i as f64 + 1.0) * 0.75 - 1.3);
            let mut values = vec![];
            for _ in 0..3 * seasons {
                state = &model.transition * &state;
                values.push(state[0]);
            }
            for w in values.windows(seasons) {
                assert!(w.iter().sum::<f64>().abs() < 1e-12, "S={seasons}");
            }
        }
    }

    #[test]
    fn block_sizes_follow_components() {
        let spec = ComponentSpec {
            series: vec![only(true, true, true, 5), only(true, false, false, 2), only(false, true, true, 3)],
            rho: 0.4,
            long_term_slope: vec![0.0; 3],
            damping: 0.5,
            frequency: 1.0,
        };
        let layout = StateLayout::new(&spec);
        assert_eq!(layout.state_dim, 2 * 2 + (4 + 2) + 2 * 2);
        assert_eq!(layout.seasonal_len, vec![4, 2]);
        assert_eq!(layout.shock_dim(), 2 * 2 + 2 + 2 * 2);
        let model = build_state_space(&spec, &CovarianceSet::isotropic(&spec, 0.1, 1.0)).unwrap();
        let ones_per_row: Vec<f64> = (0..3).map(|m| model.observation.row(m).sum()).collect();
        assert_eq!(ones_per_row, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_mismatched_or_indefinite_covariances() {
        let spec = ComponentSpec::uniform(2, only(true, false, false, 2), 0.5, 0.5, 0.0);
        let mut covs = CovarianceSet::isotropic(&spec, 1.0, 1.0);
        covs.level = DMatrix::identity(3, 3);
        assert!(matches!(build_state_space(&spec, &covs), Err(Error::Dimension(_))));
        let mut covs = CovarianceSet::isotropic(&spec, 1.0, 1.0);
        covs.observation = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(build_state_space(&spec, &covs), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn cross_series_shock_covariance_lands_in_blocks() {
        let spec = ComponentSpec::uniform(2, only(false, false, true, 2), 0.5, 0.5, 1.0);
        let mut covs = CovarianceSet::zeros(&spec);
        covs.cycle = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let model = build_state_space(&spec, &covs).unwrap();
        let l = model.layout.as_ref().unwrap();
        assert_eq!(model.state_cov[(l.cycle[0], l.cycle[1])], 0.3);
        assert_eq!(model.state_cov[(l.cycle_star[0], l.cycle_star[1])], 0.3);
        assert_eq!(model.state_cov[(l.cycle[0], l.cycle_star[1])], 0.0);
        assert_eq!(model.state_cov[(l.cycle_star[1], l.cycle_star[1])], 2.0);
    }
}
