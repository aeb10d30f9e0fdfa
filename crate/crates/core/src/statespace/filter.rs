use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::model::StateSpaceModel;
use crate::error::{Error, Result};
use crate::linalg::{log_det_chol, symmetrize};

/// Output of the Kalman filter. Index `t` refers to observation row `t`.
#[derive(Debug, Clone)]
pub struct FilterResult {
    /// `a(t) = E[α(t) | y(1..t−1)]`
    pub predicted_means: Vec<DVector<f64>>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    /// `E[α(t) | y(1..t)]`
    pub filtered_means: Vec<DVector<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    pub innovations: Vec<DVector<f64>>,
    pub innovation_covs: Vec<DMatrix<f64>>,
    pub log_likelihood: f64,
    pub(crate) gains: Gains,
}

/// Data-independent part of the filter: covariances and gains depend only on
/// the model, so they are shared by every mean recursion over the same model.
#[derive(Debug, Clone)]
pub(crate) struct Gains {
    pub predicted_covs: Vec<DMatrix<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    pub innovation_covs: Vec<DMatrix<f64>>,
    /// `Zᵀ F⁻¹`
    pub zt_finv: Vec<DMatrix<f64>>,
    /// `P Zᵀ F⁻¹`
    pub pzt_finv: Vec<DMatrix<f64>>,
    /// `L = T − T P Zᵀ F⁻¹ Z`
    pub l: Vec<DMatrix<f64>>,
    pub f_chol: Vec<Cholesky<f64, Dyn>>,
    pub log_det_f: Vec<f64>,
}

impl Gains {
    pub fn compute(model: &StateSpaceModel, steps: usize) -> Result<Self> {
        let z = &model.observation;
        let zt = z.transpose();
        let tr = &model.transition;
        let mut p = model.initial_cov.clone();
        let mut out = Gains {
            predicted_covs: Vec::with_capacity(steps),
            filtered_covs: Vec::with_capacity(steps),
            innovation_covs: Vec::with_capacity(steps),
            zt_finv: Vec::with_capacity(steps),
            pzt_finv: Vec::with_capacity(steps),
            l: Vec::with_capacity(steps),
            f_chol: Vec::with_capacity(steps),
            log_det_f: Vec::with_capacity(steps),
        };
        for t in 0..steps {
            let pzt = &p * &zt;
            let mut f = z * &pzt + &model.obs_cov;
            symmetrize(&mut f);
            let chol = Cholesky::new(f.clone()).ok_or(Error::SingularInnovation { t })?;
            let log_det = log_det_chol(&chol);
            if !log_det.is_finite() {
                return Err(Error::SingularInnovation { t });
            }
            // F⁻¹ Z P, solved rather than inverted.
            let finv_zp = chol.solve(&pzt.transpose());
            let pzt_finv = finv_zp.transpose();
            let zt_finv = chol.solve(z).transpose();
            let mut p_filt = &p - &pzt_finv * pzt.transpose();
            symmetrize(&mut p_filt);
            let l = tr - tr * &pzt_finv * z;
            let mut p_next = tr * &p_filt * tr.transpose() + &model.state_cov;
            symmetrize(&mut p_next);

            out.predicted_covs.push(p);
            out.filtered_covs.push(p_filt);
            out.innovation_covs.push(f);
            out.zt_finv.push(zt_finv);
            out.pzt_finv.push(pzt_finv);
            out.l.push(l);
            out.f_chol.push(chol);
            out.log_det_f.push(log_det);
            p = p_next;
        }
        Ok(out)
    }

    pub fn steps(&self) -> usize {
        self.predicted_covs.len()
    }
}

/// Mean recursions for one observation sequence.
pub(crate) struct MeanPass {
    pub predicted: Vec<DVector<f64>>,
    pub filtered: Vec<DVector<f64>>,
    pub innovations: Vec<DVector<f64>>,
}

pub(crate) fn mean_pass(model: &StateSpaceModel, gains: &Gains, y: &DMatrix<f64>) -> MeanPass {
    let steps = gains.steps();
    let mut a = model.initial_mean.clone();
    let mut out = MeanPass {
        predicted: Vec::with_capacity(steps),
        filtered: Vec::with_capacity(steps),
        innovations: Vec::with_capacity(steps),
    };
    for t in 0..steps {
        let v = y.row(t).transpose() - &model.observation * &a;
        let a_filt = &a + &gains.pzt_finv[t] * &v;
        let a_next = &model.transition * &a_filt + &model.state_intercept;
        out.predicted.push(a);
        out.filtered.push(a_filt);
        out.innovations.push(v);
        a = a_next;
    }
    out
}

/// Backward state-smoothing recursion for the means only:
/// `r(t−1) = Zᵀ F⁻¹ v(t) + L(t)ᵀ r(t)`, `α̂(t) = a(t) + P(t) r(t−1)`.
pub(crate) fn smoothed_means(gains: &Gains, pass: &MeanPass) -> Vec<DVector<f64>> {
    let steps = gains.steps();
    let n = pass.predicted.first().map_or(0, |a| a.len());
    let mut r = DVector::zeros(n);
    let mut out = vec![DVector::zeros(n); steps];
    for t in (0..steps).rev() {
        r = &gains.zt_finv[t] * &pass.innovations[t] + gains.l[t].transpose() * &r;
        out[t] = &pass.predicted[t] + &gains.predicted_covs[t] * &r;
    }
    if let (Some(last), Some(filt)) = (out.last_mut(), pass.filtered.last()) {
        *last = filt.clone();
    }
    out
}

pub(crate) fn check_observations(model: &StateSpaceModel, y: &DMatrix<f64>) -> Result<()> {
    if y.nrows() == 0 {
        return Err(Error::Empty("observation sequence".into()));
    }
    if y.ncols() != model.obs_dim() {
        return Err(Error::dim(format!("observations have {} columns, model expects {}", y.ncols(), model.obs_dim())));
    }
    if let Some(idx) = y.iter().position(|v| !v.is_finite()) {
        let (row, col) = (idx % y.nrows(), idx / y.nrows());
        return Err(Error::validation(format!("missing or non-finite observation at t={row}, series {col}")));
    }
    Ok(())
}

/// Exact Kalman filter with log marginal likelihood. `observations` is `T × M`.
pub fn kalman_filter(model: &StateSpaceModel, observations: &DMatrix<f64>) -> Result<FilterResult> {
    check_observations(model, observations)?;
    let gains = Gains::compute(model, observations.nrows())?;
    let pass = mean_pass(model, &gains, observations);
    let p = model.obs_dim() as f64;
    let log_likelihood = pass
        .innovations
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let quad = v.dot(&gains.f_chol[t].solve(v));
            -0.5 * (p * (2.0 * PI).ln() + gains.log_det_f[t] + quad)
        })
        .sum();
    Ok(FilterResult {
        predicted_means: pass.predicted,
        predicted_covs: gains.predicted_covs.clone(),
        filtered_means: pass.filtered,
        filtered_covs: gains.filtered_covs.clone(),
        innovations: pass.innovations,
        innovation_covs: gains.innovation_covs.clone(),
        log_likelihood,
        gains,
    })
}
