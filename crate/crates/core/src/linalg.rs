use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub(crate) const PSD_TOL: f64 = 1e-9;

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    (0..n).all(|i| (i + 1..n).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    SymmetricEigen::new(s).eigenvalues.min()
}

/// Symmetric with no eigenvalue below `-PSD_TOL` (relative to the largest entry).
pub fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let ok = is_symmetric(m, 1e-8)
        && m.iter().all(|v| v.is_finite())
        && min_eigenvalue(m) >= -PSD_TOL * m.amax().max(1.0);
    if ok {
        Ok(())
    } else {
        Err(Error::NotPsd { what: what.to_string() })
    }
}

pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPd { what: what.to_string() })
}

/// Lower factor `L` with `L Lᵀ = m` for a PSD matrix. Falls back to an
/// eigendecomposition with clamped eigenvalues when Cholesky fails.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    if m.iter().all(|v| *v == 0.0) {
        return DMatrix::zeros(m.nrows(), m.ncols());
    }
    if let Some(ch) = Cholesky::new(m.clone()) {
        return ch.l();
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s);
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Log determinant of an SPD matrix through its Cholesky factor.
pub fn log_det_chol(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

pub fn log_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    Ok(log_det_chol(&cholesky(m, what)?))
}
