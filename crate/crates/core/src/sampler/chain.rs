use nalgebra::{DMatrix, DVector};

use super::config::McmcConfig;
use super::priors::{robust_variance, ModelPriors};
use crate::error::{Error, Result};
use crate::priors::{draw_inverse_wishart, IndicatorVector, RegressionProblem};
use crate::rng::rng_from_seed;
use crate::statespace::{build_state_space, ComponentSpec, CovarianceSet, ShockKind, SimulationSmoother, StateLayout};

/// Lag-aligned training pairs. `y` is `T × M`; `x[m]` is `T × d` for series `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub y: DMatrix<f64>,
    pub x: Vec<DMatrix<f64>>,
}

impl TrainingData {
    pub fn new(y: DMatrix<f64>, x: Vec<DMatrix<f64>>) -> Result<Self> {
        if x.len() != y.ncols() {
            return Err(Error::dim(format!("{} predictor blocks for {} series", x.len(), y.ncols())));
        }
        let d = x.first().map_or(0, |b| b.ncols());
        for (m, block) in x.iter().enumerate() {
            if block.nrows() != y.nrows() || block.ncols() != d {
                return Err(Error::dim(format!(
                    "series {m} predictors are {} x {}, expected {} x {d}",
                    block.nrows(),
                    block.ncols(),
                    y.nrows()
                )));
            }
        }
        if y.nrows() < 2 {
            return Err(Error::Empty("training rows (need at least 2)".into()));
        }
        Ok(Self { y, x })
    }

    /// Targets only, no predictors.
    pub fn targets_only(y: DMatrix<f64>) -> Result<Self> {
        let x = vec![DMatrix::zeros(y.nrows(), 0); y.ncols()];
        Self::new(y, x)
    }

    pub fn num_rows(&self) -> usize {
        self.y.nrows()
    }

    pub fn num_series(&self) -> usize {
        self.y.ncols()
    }

    pub fn num_predictors(&self) -> usize {
        self.x.first().map_or(0, |b| b.ncols())
    }
}

/// One kept Gibbs iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub iteration: usize,
    /// `M` vectors of length `d`; zero rows for series without regression.
    pub beta: Vec<DVector<f64>>,
    pub gamma: Vec<IndicatorVector>,
    /// Per-series intercept; always 0 for series carrying a trend.
    pub intercept: DVector<f64>,
    pub covariances: CovarianceSet,
    /// State path, or just `α(T)` when the chain ran without `keep_paths`.
    pub states: Vec<DVector<f64>>,
}

/// Posterior sample from [`run_mcmc`] plus what is needed to project it.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub spec: ComponentSpec,
    pub layout: StateLayout,
    pub transition: DMatrix<f64>,
    pub state_intercept: DVector<f64>,
    pub observation: DMatrix<f64>,
    pub num_predictors: usize,
    pub draws: Vec<Draw>,
    /// Iterations whose `β` precision needed ridge jitter.
    pub jitter_events: usize,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn num_series(&self) -> usize {
        self.spec.num_series()
    }

    /// Regression plus intercept contribution of one draw at predictor row `x`.
    pub fn regression_effect(&self, draw: &Draw, x: &[DVector<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.num_series(),
            (0..self.num_series()).map(|m| draw.beta[m].dot(&x[m]) + draw.intercept[m]),
        )
    }
}

fn check_finite(values: impl IntoIterator<Item = f64>, iteration: usize, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::Divergence { iteration, what: what.into() })
    }
}

/// Regression design per series: the `d` predictors when the series has a
/// regression component, plus a forced intercept column when it has no trend.
struct Design {
    problem: RegressionProblem,
    has_intercept: Vec<bool>,
    d: usize,
}

impl Design {
    fn new(spec: &ComponentSpec, data: &TrainingData, priors: &ModelPriors) -> Result<Self> {
        let t = data.num_rows();
        let d = data.num_predictors();
        let mut blocks = Vec::new();
        let mut slab_priors = Vec::new();
        let mut has_intercept = Vec::new();
        for (m, comp) in spec.series.iter().enumerate() {
            let mut prior = priors.spike_slab[m].clone();
            let mut cols: Vec<DVector<f64>> = Vec::new();
            if comp.regression {
                if prior.len() != d {
                    return Err(Error::dim(format!("series {m} prior covers {} of {d} predictors", prior.len())));
                }
                cols.extend(data.x[m].column_iter().map(|c| c.into_owned()));
            } else {
                prior = crate::priors::SpikeSlabPrior::new(vec![], vec![])?;
            }
            let intercept = !comp.trend;
            if intercept {
                let y = data.y.column(m);
                let scale = 1e4 * (robust_variance(y.as_slice()) + y.mean().powi(2));
                prior.push_forced(scale);
                cols.push(DVector::from_element(t, 1.0));
            }
            has_intercept.push(intercept);
            blocks.push(if cols.is_empty() { DMatrix::zeros(t, 0) } else { DMatrix::from_columns(&cols) });
            slab_priors.push(prior);
        }
        Ok(Self { problem: RegressionProblem::new(blocks, &slab_priors)?, has_intercept, d })
    }

    /// Split a per-series coefficient vector into `(β over d, intercept)`.
    fn split(&self, spec: &ComponentSpec, m: usize, coef: &DVector<f64>) -> (DVector<f64>, f64) {
        let beta = if spec.series[m].regression { coef.rows(0, self.d).into_owned() } else { DVector::zeros(self.d) };
        let intercept = if self.has_intercept[m] { coef[coef.len() - 1] } else { 0.0 };
        (beta, intercept)
    }

    fn split_gamma(&self, spec: &ComponentSpec, m: usize, gamma: &IndicatorVector) -> IndicatorVector {
        if spec.series[m].regression {
            IndicatorVector(gamma.0[..self.d].to_vec())
        } else {
            IndicatorVector(vec![false; self.d])
        }
    }
}

/// Gibbs sampler. Each iteration, in order:
/// 1. latent states from the simulation smoother on `Y − ξ`;
/// 2. `Σ_μ, Σ_δ, Σ_τ, Σ_ω` from their inverse-Wishart full conditionals;
/// 3. `(β, γ)` on `Y − (μ + τ + ω)`;
/// 4. `Σ_ε` from its inverse-Wishart full conditional.
pub fn run_mcmc(
    data: &TrainingData,
    spec: &ComponentSpec,
    priors: &ModelPriors,
    config: &McmcConfig,
) -> Result<PosteriorDraws> {
    config.validate()?;
    spec.validate()?;
    let m = spec.num_series();
    if data.num_series() != m {
        return Err(Error::dim(format!("data has {} series, spec has {m}", data.num_series())));
    }
    if priors.spike_slab.len() != m {
        return Err(Error::dim("one spike-and-slab prior per series is required"));
    }
    let t_len = data.num_rows();
    let design = Design::new(spec, data, priors)?;
    let mut rng = rng_from_seed(config.seed);

    let prior_mean = |p: &crate::priors::InverseWishartPrior| p.mean().unwrap_or_else(|| p.scale.clone());
    let mut covs = CovarianceSet {
        level: prior_mean(&priors.level),
        slope: prior_mean(&priors.slope),
        seasonal: prior_mean(&priors.seasonal),
        cycle: prior_mean(&priors.cycle),
        observation: prior_mean(&priors.observation),
    };
    let template = build_state_space(spec, &covs)?;
    let layout = template.layout.clone().expect("structural model carries a layout");
    let n = layout.state_dim;
    let shock_slots = layout.shocks();

    let mut gamma = design.problem.initial_indicators();
    let mut coef: Vec<DVector<f64>> = (0..m).map(|s| DVector::zeros(design.problem.num_coefficients(s))).collect();
    let regression_fit = |coef: &[DVector<f64>]| -> DMatrix<f64> {
        let mut fit = DMatrix::zeros(t_len, m);
        for s in 0..m {
            let block = design.problem.design(s);
            if block.ncols() > 0 {
                fit.set_column(s, &(block * &coef[s]));
            }
        }
        fit
    };

    let mut kept = Vec::with_capacity(config.kept_draws());
    let mut jitter_events = 0;
    let mut states: Vec<DVector<f64>> = vec![DVector::zeros(n); t_len];

    for iter in 0..config.iterations {
        // (1) states
        let xi = regression_fit(&coef);
        let model = build_state_space(spec, &covs)?;
        if n > 0 {
            let y_star = &data.y - &xi;
            let smoother = SimulationSmoother::new(&model, t_len)?;
            states = smoother.draw(&y_star, &mut rng)?;
            check_finite(states.iter().flat_map(|s| s.iter().copied()), iter, "latent states")?;

            // (2) component covariances from state-shock residuals
            let shocks: Vec<DVector<f64>> = (0..t_len - 1)
                .map(|t| {
                    let resid = &states[t + 1] - &model.transition * &states[t] - &model.state_intercept;
                    DVector::from_iterator(shock_slots.len(), shock_slots.iter().map(|&(_, slot)| resid[slot]))
                })
                .collect();
            for kind in ShockKind::ALL {
                let prior = priors.component(kind);
                let k = prior.dim();
                if k == 0 {
                    continue;
                }
                let mut scatter = DMatrix::zeros(k, k);
                let groups = layout.shock_groups(kind);
                for eta in &shocks {
                    for g in &groups {
                        let e = DVector::from_iterator(k, g.iter().map(|&j| eta[j]));
                        scatter += &e * e.transpose();
                    }
                }
                let count = shocks.len() * groups.len();
                let draw = draw_inverse_wishart(prior, count, &scatter, &mut rng)?;
                *covs.get_mut(kind) = draw;
            }
        }

        // (3) regression
        let mut state_fit = DMatrix::zeros(t_len, m);
        if n > 0 {
            for t in 0..t_len {
                state_fit.set_row(t, &(&model.observation * &states[t]).transpose());
            }
        }
        let resid = &data.y - &state_fit;
        let reg = design.problem.draw_beta_and_indicators(&resid, &covs.observation, &gamma, &mut rng)?;
        if reg.jittered {
            jitter_events += 1;
        }
        check_finite(reg.beta.iter().flat_map(|b| b.iter().copied()), iter, "regression coefficients")?;
        coef = reg.beta;
        gamma = reg.gamma;

        // (4) observation covariance
        let err = &resid - regression_fit(&coef);
        let scatter = err.transpose() * &err;
        covs.observation = draw_inverse_wishart(&priors.observation, t_len, &scatter, &mut rng)?;
        check_finite(covs.observation.iter().copied(), iter, "observation covariance")?;

        if iter >= config.burn_in && (iter - config.burn_in + 1) % config.thinning == 0 {
            let mut beta = Vec::with_capacity(m);
            let mut intercept = DVector::zeros(m);
            let mut gam = Vec::with_capacity(m);
            for s in 0..m {
                let (b, c) = design.split(spec, s, &coef[s]);
                beta.push(b);
                intercept[s] = c;
                gam.push(design.split_gamma(spec, s, &gamma[s]));
            }
            kept.push(Draw {
                iteration: iter,
                beta,
                gamma: gam,
                intercept,
                covariances: covs.clone(),
                states: if config.keep_paths { states.clone() } else { states.last().into_iter().cloned().collect() },
            });
        }
    }

    Ok(PosteriorDraws {
        spec: spec.clone(),
        layout,
        transition: template.transition.clone(),
        state_intercept: template.state_intercept.clone(),
        observation: template.observation.clone(),
        num_predictors: design.d,
        draws: kept,
        jitter_events,
    })
}
