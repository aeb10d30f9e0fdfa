use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, log_det_chol, standard_normal_vector, symmetrize};

/// Ridge added to a conditional precision that fails to factor.
pub const RIDGE_JITTER: f64 = 1e-8;

/// Spike-and-slab prior over one series' coefficients: with probability
/// `1 − π_j` the coefficient is exactly zero, otherwise it is Gaussian with a
/// variance derived from `slab_scale[j]` (see [`RegressionProblem`]).
///
/// Entries flagged in `forced` are always included and skip selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSlabPrior {
    pub inclusion_prob: Vec<f64>,
    pub slab_scale: Vec<f64>,
    #[serde(default)]
    pub forced: Vec<bool>,
}

impl SpikeSlabPrior {
    pub fn new(inclusion_prob: Vec<f64>, slab_scale: Vec<f64>) -> Result<Self> {
        let d = inclusion_prob.len();
        let prior = Self { inclusion_prob, slab_scale, forced: vec![false; d] };
        prior.validate()?;
        Ok(prior)
    }

    pub fn uniform(d: usize, inclusion_prob: f64, slab_scale: f64) -> Result<Self> {
        Self::new(vec![inclusion_prob; d], vec![slab_scale; d])
    }

    /// `π = k / d` for an expected model size of `k` predictors.
    pub fn with_expected_size(d: usize, expected: f64, slab_scale: f64) -> Result<Self> {
        if d == 0 {
            return Self::new(vec![], vec![]);
        }
        Self::uniform(d, expected / d as f64, slab_scale)
    }

    pub fn len(&self) -> usize {
        self.inclusion_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inclusion_prob.is_empty()
    }

    /// Append an always-included coefficient (used for intercepts).
    pub fn push_forced(&mut self, slab_scale: f64) {
        self.inclusion_prob.push(1.0);
        self.slab_scale.push(slab_scale);
        self.forced.push(true);
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.inclusion_prob.len();
        if self.slab_scale.len() != d || self.forced.len() != d {
            return Err(Error::dim("spike-and-slab prior vectors differ in length"));
        }
        for j in 0..d {
            let p = self.inclusion_prob[j];
            if !self.forced[j] && !(p > 0.0 && p < 1.0) {
                return Err(Error::config(format!("inclusion probability {p} for predictor {j} must lie in (0, 1)")));
            }
            let s = self.slab_scale[j];
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config(format!("slab scale {s} for predictor {j} must be finite and positive")));
            }
        }
        Ok(())
    }
}

/// Per-series inclusion flags `γ_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorVector(pub Vec<bool>);

impl IndicatorVector {
    pub fn count(&self) -> usize {
        self.0.iter().filter(|g| **g).count()
    }
}

/// One Gibbs update of every series' coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDraw {
    pub beta: Vec<DVector<f64>>,
    pub gamma: Vec<IndicatorVector>,
    /// The conditional precision needed [`RIDGE_JITTER`] to factor.
    pub jittered: bool,
}

/// Seemingly-unrelated regression `r(t) = X̃(t) β + ε(t)`, `ε ~ N(0, Σ)`,
/// where series `m` has its own `T × d_m` predictor matrix. Cross products
/// are computed once and reused across sweeps.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    predictors: Vec<DMatrix<f64>>,
    offsets: Vec<usize>,
    total: usize,
    cross: Vec<Vec<DMatrix<f64>>>,
    slab_var: Vec<f64>,
    log_prior_odds: Vec<f64>,
    forced: Vec<bool>,
}

impl RegressionProblem {
    /// Slab variance for predictor `j` is `slab_scale · n / (xⱼᵀxⱼ)`; an
    /// all-zero column keeps the bare `slab_scale`.
    pub fn new(predictors: Vec<DMatrix<f64>>, priors: &[SpikeSlabPrior]) -> Result<Self> {
        if predictors.len() != priors.len() {
            return Err(Error::dim("one spike-and-slab prior per series is required"));
        }
        let rows = predictors.first().map_or(0, |x| x.nrows());
        let mut offsets = Vec::with_capacity(predictors.len());
        let mut total = 0;
        let mut slab_var = Vec::new();
        let mut log_prior_odds = Vec::new();
        let mut forced = Vec::new();
        for (m, (x, prior)) in predictors.iter().zip(priors).enumerate() {
            prior.validate()?;
            if x.nrows() != rows {
                return Err(Error::dim(format!("series {m} predictors have {} rows, expected {rows}", x.nrows())));
            }
            if x.ncols() != prior.len() {
                return Err(Error::dim(format!("series {m} has {} predictors but a prior of length {}", x.ncols(), prior.len())));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("series {m} predictors contain non-finite values")));
            }
            offsets.push(total);
            total += x.ncols();
            for j in 0..x.ncols() {
                let ss = x.column(j).norm_squared();
                let v = if ss > 0.0 { prior.slab_scale[j] * rows as f64 / ss } else { prior.slab_scale[j] };
                slab_var.push(v);
                let p = prior.inclusion_prob[j];
                log_prior_odds.push(if prior.forced[j] { 0.0 } else { p.ln() - (1.0 - p).ln() });
                forced.push(prior.forced[j]);
            }
        }
        let cross = predictors
            .iter()
            .map(|xa| predictors.iter().map(|xb| xa.transpose() * xb).collect())
            .collect();
        Ok(Self { predictors, offsets, total, cross, slab_var, log_prior_odds, forced })
    }

    pub fn num_series(&self) -> usize {
        self.predictors.len()
    }

    pub fn num_rows(&self) -> usize {
        self.predictors.first().map_or(0, |x| x.nrows())
    }

    pub fn num_coefficients(&self, series: usize) -> usize {
        self.predictors[series].ncols()
    }

    /// Predictor matrix of one series.
    pub fn design(&self, series: usize) -> &DMatrix<f64> {
        &self.predictors[series]
    }

    pub fn slab_variances(&self) -> &[f64] {
        &self.slab_var
    }

    /// Initial indicators: forced coefficients on, everything else off.
    pub fn initial_indicators(&self) -> Vec<IndicatorVector> {
        (0..self.num_series())
            .map(|m| {
                let o = self.offsets[m];
                IndicatorVector((0..self.num_coefficients(m)).map(|j| self.forced[o + j]).collect())
            })
            .collect()
    }

    /// `G = X̃ᵀ (I ⊗ Σ⁻¹) X̃` and `b = Σ_t X̃(t)ᵀ Σ⁻¹ r(t)`.
    fn sufficient(&self, residuals: &DMatrix<f64>, cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let m = self.num_series();
        if residuals.ncols() != m || residuals.nrows() != self.num_rows() {
            return Err(Error::dim(format!(
                "residuals must be {} x {m}, got {} x {}",
                self.num_rows(),
                residuals.nrows(),
                residuals.ncols()
            )));
        }
        if cov.nrows() != m || cov.ncols() != m {
            return Err(Error::dim("residual covariance must be M x M"));
        }
        let mut w = cholesky(cov, "residual covariance")?.inverse();
        symmetrize(&mut w);
        let mut g = DMatrix::zeros(self.total, self.total);
        for a in 0..m {
            for b in 0..m {
                let block = &self.cross[a][b] * w[(a, b)];
                g.view_mut((self.offsets[a], self.offsets[b]), block.shape()).copy_from(&block);
            }
        }
        // Column a of `rw` is Σ_b W[a,b] r_b.
        let rw = residuals * &w;
        let mut bvec = DVector::zeros(self.total);
        for a in 0..m {
            let part = self.predictors[a].transpose() * rw.column(a);
            bvec.rows_mut(self.offsets[a], part.len()).copy_from(&part);
        }
        Ok((g, bvec))
    }

    fn active(&self, gamma: &[bool]) -> Vec<usize> {
        (0..self.total).filter(|&i| gamma[i]).collect()
    }

    fn precision(&self, g: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
        let k = idx.len();
        DMatrix::from_fn(k, k, |i, j| {
            let v = g[(idx[i], idx[j])];
            if i == j {
                v + 1.0 / self.slab_var[idx[i]]
            } else {
                v
            }
        })
    }

    fn factor(&self, omega: DMatrix<f64>) -> Result<(Cholesky<f64, nalgebra::Dyn>, bool)> {
        if let Some(ch) = Cholesky::new(omega.clone()) {
            return Ok((ch, false));
        }
        let k = omega.nrows();
        let jittered = omega + DMatrix::identity(k, k) * RIDGE_JITTER;
        let ch = Cholesky::new(jittered).ok_or_else(|| Error::NotPd { what: "conditional precision of β".into() })?;
        log::warn!("conditional precision of beta needed ridge jitter {RIDGE_JITTER:e}");
        Ok((ch, true))
    }

    /// Log marginal likelihood of `γ` up to a γ-independent constant, with
    /// `β` integrated over the slab.
    fn log_marginal(&self, g: &DMatrix<f64>, b: &DVector<f64>, gamma: &[bool]) -> Result<f64> {
        let idx = self.active(gamma);
        if idx.is_empty() {
            return Ok(0.0);
        }
        let (ch, _) = self.factor(self.precision(g, &idx))?;
        let bg = DVector::from_iterator(idx.len(), idx.iter().map(|&i| b[i]));
        let sol = ch.solve(&bg);
        let log_det_v: f64 = idx.iter().map(|&i| self.slab_var[i].ln()).sum();
        Ok(-0.5 * log_det_v - 0.5 * log_det_chol(&ch) + 0.5 * bg.dot(&sol))
    }

    fn flatten(&self, gamma: &[IndicatorVector]) -> Result<Vec<bool>> {
        if gamma.len() != self.num_series() {
            return Err(Error::dim("indicator count must match series count"));
        }
        let mut flat = Vec::with_capacity(self.total);
        for (m, g) in gamma.iter().enumerate() {
            if g.0.len() != self.num_coefficients(m) {
                return Err(Error::dim(format!("series {m} indicator length mismatch")));
            }
            flat.extend_from_slice(&g.0);
        }
        for (i, f) in self.forced.iter().enumerate() {
            if *f {
                flat[i] = true;
            }
        }
        Ok(flat)
    }

    fn unflatten<T: Clone>(&self, flat: &[T]) -> Vec<Vec<T>> {
        (0..self.num_series())
            .map(|m| flat[self.offsets[m]..self.offsets[m] + self.num_coefficients(m)].to_vec())
            .collect()
    }

    /// Conditional posterior `β_γ | γ, r, Σ`: mean and covariance over the
    /// included coefficients, scattered back to full per-series vectors.
    pub fn conditional_posterior(
        &self,
        residuals: &DMatrix<f64>,
        cov: &DMatrix<f64>,
        gamma: &[IndicatorVector],
    ) -> Result<(Vec<DVector<f64>>, DMatrix<f64>)> {
        let flat = self.flatten(gamma)?;
        let (g, b) = self.sufficient(residuals, cov)?;
        let idx = self.active(&flat);
        let mut mean = DVector::zeros(self.total);
        let mut full_cov = DMatrix::zeros(self.total, self.total);
        if !idx.is_empty() {
            let (ch, _) = self.factor(self.precision(&g, &idx))?;
            let bg = DVector::from_iterator(idx.len(), idx.iter().map(|&i| b[i]));
            let mu = ch.solve(&bg);
            let c = ch.inverse();
            for (a, &ia) in idx.iter().enumerate() {
                mean[ia] = mu[a];
                for (bb, &ib) in idx.iter().enumerate() {
                    full_cov[(ia, ib)] = c[(a, bb)];
                }
            }
        }
        let per_series = self.unflatten(mean.as_slice()).into_iter().map(DVector::from_vec).collect();
        Ok((per_series, full_cov))
    }

    /// One Gibbs sweep: each free `γ_j` from its full conditional with `β`
    /// marginalised, then `β | γ` jointly. Excluded coefficients are exactly 0.
    pub fn draw_beta_and_indicators<R: Rng + ?Sized>(
        &self,
        residuals: &DMatrix<f64>,
        cov: &DMatrix<f64>,
        gamma: &[IndicatorVector],
        rng: &mut R,
    ) -> Result<RegressionDraw> {
        let mut flat = self.flatten(gamma)?;
        let (g, b) = self.sufficient(residuals, cov)?;
        let mut current = self.log_marginal(&g, &b, &flat)?;
        for j in 0..self.total {
            if self.forced[j] {
                continue;
            }
            let was = flat[j];
            flat[j] = !was;
            let flipped = self.log_marginal(&g, &b, &flat)?;
            let (on, off) = if was { (current, flipped) } else { (flipped, current) };
            let log_odds = on - off + self.log_prior_odds[j];
            let p_on = 1.0 / (1.0 + (-log_odds).exp());
            let now = rng.random::<f64>() < p_on;
            flat[j] = now;
            if now != was {
                current = flipped;
            }
        }

        let idx = self.active(&flat);
        let mut beta = vec![0.0; self.total];
        let mut jittered = false;
        if !idx.is_empty() {
            let (ch, jit) = self.factor(self.precision(&g, &idx))?;
            jittered = jit;
            let bg = DVector::from_iterator(idx.len(), idx.iter().map(|&i| b[i]));
            let mean = ch.solve(&bg);
            let z = standard_normal_vector(idx.len(), rng);
            // Lᵀ x = z gives x ~ N(0, Ω⁻¹).
            let noise = ch
                .l()
                .transpose()
                .solve_upper_triangular(&z)
                .ok_or_else(|| Error::NotPd { what: "conditional precision of β".into() })?;
            let draw = mean + noise;
            for (a, &i) in idx.iter().enumerate() {
                beta[i] = draw[a];
            }
        }
        Ok(RegressionDraw {
            beta: self.unflatten(&beta).into_iter().map(DVector::from_vec).collect(),
            gamma: self.unflatten(&flat).into_iter().map(IndicatorVector).collect(),
            jittered,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, Normal};

    fn design(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        DMatrix::from_fn(rows, cols, |_, _| n.sample(&mut rng))
    }

    #[test]
    fn prior_validation() {
        assert!(SpikeSlabPrior::uniform(3, 0.0, 1.0).is_err());
        assert!(SpikeSlabPrior::uniform(3, 0.5, 0.0).is_err());
        assert!(SpikeSlabPrior::uniform(3, 0.5, f64::INFINITY).is_err());
        let p = SpikeSlabPrior::with_expected_size(4, 1.0, 1.0).unwrap();
        assert_eq!(p.inclusion_prob, vec![0.25; 4]);
    }

    #[test]
    fn diffuse_slab_recovers_least_squares() {
        let x = design(60, 3, 1);
        let truth = DVector::from_vec(vec![1.5, -2.0, 0.7]);
        let noise = design(60, 1, 2) * 0.5;
        let r = &x * &truth + noise.column(0);
        let prior = SpikeSlabPrior::uniform(3, 0.5, 1e8).unwrap();
        let problem = RegressionProblem::new(vec![x.clone()], &[prior]).unwrap();
        let cov = DMatrix::from_element(1, 1, 0.25);
        let resid = DMatrix::from_column_slice(60, 1, r.as_slice());
        let gamma = vec![IndicatorVector(vec![true; 3])];
        let (mean, _) = problem.conditional_posterior(&resid, &cov, &gamma).unwrap();
        let ols = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * &r));
        assert!((&mean[0] - ols).amax() < 1e-3);
    }

    #[test]
    fn excluded_coefficients_are_exactly_zero() {
        let x = design(40, 5, 3);
        let r = DMatrix::from_column_slice(40, 1, design(40, 1, 4).as_slice());
        let problem = RegressionProblem::new(vec![x], &[SpikeSlabPrior::uniform(5, 0.3, 1.0).unwrap()]).unwrap();
        let mut gamma = problem.initial_indicators();
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let draw = problem.draw_beta_and_indicators(&r, &DMatrix::identity(1, 1), &gamma, &mut rng).unwrap();
            for (b, g) in draw.beta[0].iter().zip(&draw.gamma[0].0) {
                if !g {
                    assert_eq!(b.to_bits(), 0.0f64.to_bits());
                }
            }
            gamma = draw.gamma;
        }
    }

    #[test]
    fn zero_column_keeps_prior_inclusion() {
        let mut x = design(50, 2, 6);
        x.column_mut(1).fill(0.0);
        let r = DMatrix::from_column_slice(50, 1, (&x.column(0) * 2.0 + design(50, 1, 7).column(0)).as_slice());
        let problem = RegressionProblem::new(vec![x], &[SpikeSlabPrior::uniform(2, 0.3, 1.0).unwrap()]).unwrap();
        let mut gamma = problem.initial_indicators();
        let mut rng = rng_from_seed(8);
        let n = 20_000;
        let mut hits = 0;
        for _ in 0..n {
            let draw = problem.draw_beta_and_indicators(&r, &DMatrix::identity(1, 1), &gamma, &mut rng).unwrap();
            hits += draw.gamma[0].0[1] as usize;
            gamma = draw.gamma;
        }
        let freq = hits as f64 / n as f64;
        // Draws of that indicator are independent Bernoulli(π) here.
        let se = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((freq - 0.3).abs() < 4.0 * se, "{freq}");
    }

    #[test]
    fn forced_coefficients_stay_included() {
        let x = design(30, 2, 9);
        let mut prior = SpikeSlabPrior::uniform(1, 0.01, 1.0).unwrap();
        prior.push_forced(1e6);
        let problem = RegressionProblem::new(vec![x], &[prior]).unwrap();
        let r = DMatrix::zeros(30, 1);
        let mut gamma = problem.initial_indicators();
        assert_eq!(gamma[0].0, vec![false, true]);
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let d = problem.draw_beta_and_indicators(&r, &DMatrix::identity(1, 1), &gamma, &mut rng).unwrap();
            assert!(d.gamma[0].0[1]);
            gamma = d.gamma;
        }
    }

    #[test]
    fn collinear_predictors_with_tiny_slab_need_no_jitter_but_exact_duplicates_are_handled() {
        let x = design(20, 1, 10);
        let dup = DMatrix::from_fn(20, 2, |i, _| x[(i, 0)]);
        let problem = RegressionProblem::new(vec![dup], &[SpikeSlabPrior::uniform(2, 0.5, 1e30).unwrap()]).unwrap();
        let r = DMatrix::from_column_slice(20, 1, x.as_slice());
        let gamma = vec![IndicatorVector(vec![true, true])];
        let (mean, _) = problem.conditional_posterior(&r, &DMatrix::identity(1, 1), &gamma).unwrap();
        assert!(mean[0].iter().all(|v| v.is_finite()));
    }
}
