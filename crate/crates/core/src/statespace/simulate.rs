use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::filter::{check_observations, mean_pass, smoothed_means, Gains};
use super::model::StateSpaceModel;
use crate::error::Result;
use crate::linalg::{psd_factor, standard_normal_vector};
use crate::rng::rng_from_seed;

/// A generated trajectory: `states[t]` and the `T × M` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub states: Vec<DVector<f64>>,
    pub observations: DMatrix<f64>,
}

pub(crate) struct NoiseFactors {
    shock: DMatrix<f64>,
    obs: DMatrix<f64>,
}

impl NoiseFactors {
    pub fn new(model: &StateSpaceModel) -> Self {
        Self { shock: psd_factor(&model.shock_cov), obs: psd_factor(&model.obs_cov) }
    }
}

pub(crate) fn simulate_from_state<R: Rng + ?Sized>(
    model: &StateSpaceModel,
    noise: &NoiseFactors,
    initial: DVector<f64>,
    steps: usize,
    rng: &mut R,
) -> SimulatedPath {
    let m = model.obs_dim();
    let q = model.shock_cov.nrows();
    let mut states = Vec::with_capacity(steps);
    let mut observations = DMatrix::zeros(steps, m);
    let mut alpha = initial;
    for t in 0..steps {
        let eps = &noise.obs * standard_normal_vector(m, rng);
        let y = &model.observation * &alpha + eps;
        observations.set_row(t, &y.transpose());
        let eta = &noise.shock * standard_normal_vector(q, rng);
        let next = &model.transition * &alpha + &model.state_intercept + &model.selector * eta;
        states.push(alpha);
        alpha = next;
    }
    SimulatedPath { states, observations }
}

pub(crate) fn draw_initial<R: Rng + ?Sized>(model: &StateSpaceModel, rng: &mut R) -> DVector<f64> {
    let n = model.state_dim();
    &model.initial_mean + psd_factor(&model.initial_cov) * standard_normal_vector(n, rng)
}

/// Generate `steps` periods from the model, drawing `α(1)` from its prior.
pub fn simulate_forward(model: &StateSpaceModel, steps: usize, seed: u64) -> SimulatedPath {
    let mut rng = rng_from_seed(seed);
    let initial = draw_initial(model, &mut rng);
    simulate_from_state(model, &NoiseFactors::new(model), initial, steps, &mut rng)
}

/// Generate `steps` periods starting from a fixed `α(1)`.
pub fn simulate_forward_from(model: &StateSpaceModel, initial: &DVector<f64>, steps: usize, seed: u64) -> SimulatedPath {
    let mut rng = rng_from_seed(seed);
    simulate_from_state(model, &NoiseFactors::new(model), initial.clone(), steps, &mut rng)
}

/// Reusable simulation smoother for one model and one sample length.
///
/// Filter gains are computed once; each draw costs one forward simulation and
/// two mean-only filter/smoother passes.
pub struct SimulationSmoother<'a> {
    model: &'a StateSpaceModel,
    gains: Gains,
    noise: NoiseFactors,
}

impl<'a> SimulationSmoother<'a> {
    pub fn new(model: &'a StateSpaceModel, steps: usize) -> Result<Self> {
        Ok(Self { model, gains: Gains::compute(model, steps)?, noise: NoiseFactors::new(model) })
    }

    /// Mean-correction draw: `α̃ = α⁺ − E[α | y⁺] + E[α | y]` where `(α⁺, y⁺)`
    /// is an unconditional draw from the model.
    pub fn draw<R: Rng + ?Sized>(&self, observations: &DMatrix<f64>, rng: &mut R) -> Result<Vec<DVector<f64>>> {
        check_observations(self.model, observations)?;
        let steps = self.gains.steps();
        if observations.nrows() != steps {
            return Err(crate::error::Error::dim(format!(
                "simulation smoother built for {steps} steps, got {}",
                observations.nrows()
            )));
        }
        let initial = draw_initial(self.model, rng);
        let plus = simulate_from_state(self.model, &self.noise, initial, steps, rng);
        let hat = smoothed_means(&self.gains, &mean_pass(self.model, &self.gains, observations));
        let hat_plus = smoothed_means(&self.gains, &mean_pass(self.model, &self.gains, &plus.observations));
        Ok(plus
            .states
            .into_iter()
            .zip(hat)
            .zip(hat_plus)
            .map(|((a_plus, h), hp)| a_plus - hp + h)
            .collect())
    }

    pub fn smoothed_means(&self, observations: &DMatrix<f64>) -> Vec<DVector<f64>> {
        smoothed_means(&self.gains, &mean_pass(self.model, &self.gains, observations))
    }
}

/// One draw from `p(α(1..T) | y(1..T))`.
pub fn simulate_states(model: &StateSpaceModel, observations: &DMatrix<f64>, seed: u64) -> Result<Vec<DVector<f64>>> {
    check_observations(model, observations)?;
    let mut rng = rng_from_seed(seed);
    SimulationSmoother::new(model, observations.nrows())?.draw(observations, &mut rng)
}
