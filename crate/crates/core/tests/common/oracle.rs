//! Brute-force joint-Gaussian view of a state-space model.
//!
//! Unrolls the recursions into one linear map from the stacked Gaussian
//! vector `z = (α(1) − a₁, η(1..T−1), ε(1..T))` to every state and
//! observation, then evaluates densities and conditionals densely. Nothing
//! here shares code with the filter or smoother.

use mbsts::StateSpaceModel;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub struct JointGaussian {
    /// Per time: state mean and loading on z.
    pub state_mean: Vec<DVector<f64>>,
    pub state_load: Vec<DMatrix<f64>>,
    pub obs_mean: DVector<f64>,
    pub obs_load: DMatrix<f64>,
    pub z_cov: DMatrix<f64>,
}

impl JointGaussian {
    pub fn new(model: &StateSpaceModel, steps: usize) -> Self {
        let n = model.transition.nrows();
        let p = model.observation.nrows();
        let q = model.shock_cov.nrows();
        let dim_z = n + q * (steps.saturating_sub(1)) + p * steps;
        let mut z_cov = DMatrix::zeros(dim_z, dim_z);
        z_cov.view_mut((0, 0), (n, n)).copy_from(&model.initial_cov);
        for s in 0..steps.saturating_sub(1) {
            let o = n + s * q;
            z_cov.view_mut((o, o), (q, q)).copy_from(&model.shock_cov);
        }
        let eps0 = n + q * steps.saturating_sub(1);
        for t in 0..steps {
            let o = eps0 + t * p;
            z_cov.view_mut((o, o), (p, p)).copy_from(&model.obs_cov);
        }

        let mut state_mean = Vec::new();
        let mut state_load = Vec::new();
        let mut mean = model.initial_mean.clone();
        let mut load = DMatrix::zeros(n, dim_z);
        load.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        let mut obs_mean = DVector::zeros(p * steps);
        let mut obs_load = DMatrix::zeros(p * steps, dim_z);
        for t in 0..steps {
            let ym = &model.observation * &mean;
            obs_mean.rows_mut(t * p, p).copy_from(&ym);
            let mut yl = &model.observation * &load;
            for i in 0..p {
                yl[(i, eps0 + t * p + i)] += 1.0;
            }
            obs_load.view_mut((t * p, 0), (p, dim_z)).copy_from(&yl);
            state_mean.push(mean.clone());
            state_load.push(load.clone());
            if t + 1 < steps {
                mean = &model.transition * &mean + &model.state_intercept;
                let mut next = &model.transition * &load;
                let o = n + t * q;
                let mut blk = next.view_mut((0, o), (n, q));
                blk += &model.selector;
                load = next;
            }
        }
        Self { state_mean, state_load, obs_mean, obs_load, z_cov }
    }

    pub fn obs_cov(&self) -> DMatrix<f64> {
        &self.obs_load * &self.z_cov * self.obs_load.transpose()
    }

    pub fn stack(y: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(y.nrows() * y.ncols(), (0..y.nrows()).flat_map(|t| (0..y.ncols()).map(move |j| y[(t, j)])))
    }

    pub fn log_density(&self, y: &DMatrix<f64>) -> f64 {
        let v = Self::stack(y) - &self.obs_mean;
        let mut cov = self.obs_cov();
        cov = 0.5 * (&cov + cov.transpose());
        let ch = cov.cholesky().expect("joint covariance must be SPD");
        let logdet = 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let quad = v.dot(&ch.solve(&v));
        -0.5 * (v.len() as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
    }

    /// `E[α(t) | y]` and `Var[α(t) | y]` for every t.
    pub fn conditional_states(&self, y: &DMatrix<f64>) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
        let v = Self::stack(y) - &self.obs_mean;
        let mut cov = self.obs_cov();
        cov = 0.5 * (&cov + cov.transpose());
        let ch = cov.cholesky().expect("joint covariance must be SPD");
        let weights = ch.solve(&v);
        let mut means = Vec::new();
        let mut covs = Vec::new();
        for (m, a) in self.state_mean.iter().zip(&self.state_load) {
            let cross = a * &self.z_cov * self.obs_load.transpose();
            means.push(m + &cross * &weights);
            let prior = a * &self.z_cov * a.transpose();
            covs.push(prior - &cross * ch.solve(&cross.transpose()));
        }
        (means, covs)
    }
}

fn random_matrix<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn random_spd<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = random_matrix(n, n, 1.0, rng);
    &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.2
}

/// Random well-posed model with `state_dim · steps ≤ budget`.
pub fn random_model<R: Rng>(rng: &mut R, budget: usize) -> (StateSpaceModel, usize) {
    let n = rng.random_range(1..=4usize);
    let p = rng.random_range(1..=3usize);
    let q = rng.random_range(1..=n);
    let steps = rng.random_range(1..=(budget / n).min(16));
    let model = StateSpaceModel::new(
        random_matrix(n, n, 0.6, rng),
        random_matrix(n, 1, 0.5, rng).column(0).into_owned(),
        random_matrix(p, n, 1.0, rng),
        random_matrix(n, q, 1.0, rng),
        random_spd(q, rng),
        random_spd(p, rng),
        random_matrix(n, 1, 1.0, rng).column(0).into_owned(),
        random_spd(n, rng) * 3.0,
    )
    .unwrap();
    (model, steps)
}

pub fn random_observations<R: Rng>(steps: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    random_matrix(steps, p, 2.0, rng)
}
