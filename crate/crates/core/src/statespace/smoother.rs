use nalgebra::{DMatrix, DVector};

use super::filter::FilterResult;
use crate::linalg::symmetrize;

#[derive(Debug, Clone)]
pub struct SmootherResult {
    pub smoothed_means: Vec<DVector<f64>>,
    pub smoothed_covs: Vec<DMatrix<f64>>,
}

/// Fixed-interval smoother in the backward-recursion form
///
/// ```text
/// r(t−1) = Zᵀ F⁻¹ v(t) + Lᵀ r(t)      N(t−1) = Zᵀ F⁻¹ Z + Lᵀ N(t) L
/// α̂(t)   = a(t) + P(t) r(t−1)         V(t)   = P(t) − P(t) N(t−1) P(t)
/// ```
///
/// which only inverts innovation covariances. The last step is copied from
/// the filter, where the two coincide.
pub fn kalman_smoother(filter: &FilterResult) -> SmootherResult {
    let g = &filter.gains;
    let steps = g.steps();
    let n = filter.predicted_means.first().map_or(0, |a| a.len());
    let mut r = DVector::zeros(n);
    let mut big_n = DMatrix::zeros(n, n);
    let mut means = vec![DVector::zeros(n); steps];
    let mut covs = vec![DMatrix::zeros(n, n); steps];
    for t in (0..steps).rev() {
        let zt_finv = &g.zt_finv[t];
        let lt = g.l[t].transpose();
        r = zt_finv * &filter.innovations[t] + &lt * &r;
        // Zᵀ F⁻¹ Z = (Zᵀ F⁻¹)(F)(F⁻¹ Z)
        let ztfz = zt_finv * &g.innovation_covs[t] * zt_finv.transpose();
        big_n = ztfz + &lt * &big_n * lt.transpose();
        symmetrize(&mut big_n);
        let p = &g.predicted_covs[t];
        means[t] = &filter.predicted_means[t] + p * &r;
        let mut v = p - p * &big_n * p;
        symmetrize(&mut v);
        covs[t] = v;
    }
    if steps > 0 {
        means[steps - 1] = filter.filtered_means[steps - 1].clone();
        covs[steps - 1] = filter.filtered_covs[steps - 1].clone();
    }
    SmootherResult { smoothed_means: means, smoothed_covs: covs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::filter::kalman_filter;
    use crate::statespace::model::StateSpaceModel;

    #[test]
    fn static_state_gives_constant_smoothed_mean() {
        let model = StateSpaceModel::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::identity(1, 1) * 4.0,
        )
        .unwrap();
        let y = DMatrix::from_column_slice(5, 1, &[1.0, -0.3, 2.2, 0.7, 1.1]);
        let filt = kalman_filter(&model, &y).unwrap();
        let sm = kalman_smoother(&filt);
        let last = sm.smoothed_means[4][0];
        for m in &sm.smoothed_means {
            assert!((m[0] - last).abs() < 1e-12);
        }
        assert_eq!(sm.smoothed_means[4], filt.filtered_means[4]);
        assert_eq!(sm.smoothed_covs[4], filt.filtered_covs[4]);
    }
}
