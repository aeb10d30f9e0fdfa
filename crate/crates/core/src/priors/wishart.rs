use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{check_psd, cholesky, symmetrize};

/// Inverse-Wishart prior `IW(ν, Ψ)`, parameterised so that the mean is
/// `Ψ / (ν − p − 1)` for `ν > p + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseWishartPrior {
    pub dof: f64,
    pub scale: DMatrix<f64>,
}

impl InverseWishartPrior {
    pub fn new(dof: f64, scale: DMatrix<f64>) -> Result<Self> {
        let p = scale.nrows();
        if !scale.is_square() {
            return Err(Error::dim("inverse-Wishart scale must be square"));
        }
        if !(dof > p as f64 - 1.0) || !dof.is_finite() {
            return Err(Error::config(format!("inverse-Wishart dof {dof} must exceed dim - 1 = {}", p as f64 - 1.0)));
        }
        if p > 0 {
            cholesky(&scale, "inverse-Wishart scale")?;
        }
        Ok(Self { dof, scale })
    }

    pub fn dim(&self) -> usize {
        self.scale.nrows()
    }

    /// Prior mean, defined for `ν > p + 1`.
    pub fn mean(&self) -> Option<DMatrix<f64>> {
        let denom = self.dof - self.dim() as f64 - 1.0;
        (denom > 0.0).then(|| &self.scale / denom)
    }
}

/// Bartlett draw of `W ~ Wishart(dof, L Lᵀ)` returned as the factor `L A`
/// with `W = (L A)(L A)ᵀ`.
fn bartlett_factor<R: Rng + ?Sized>(chol_lower: &DMatrix<f64>, dof: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let p = chol_lower.nrows();
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(dof - i as f64).map_err(|e| Error::config(format!("chi-square dof: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(chol_lower * a)
}

/// Draw from the conjugate update `IW(ν + n, Ψ + S)` given `n` observations
/// with scatter matrix `S = Σ e eᵀ`. With `n = 0` and a zero scatter this is
/// a prior draw.
pub fn draw_inverse_wishart<R: Rng + ?Sized>(
    prior: &InverseWishartPrior,
    count: usize,
    scatter: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let p = prior.dim();
    if scatter.nrows() != p || scatter.ncols() != p {
        return Err(Error::dim(format!("scatter must be {p} x {p}")));
    }
    if p == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    check_psd(scatter, "scatter matrix")?;
    let mut post_scale = &prior.scale + scatter;
    symmetrize(&mut post_scale);
    let dof = prior.dof + count as f64;
    // W ~ Wishart(dof, post_scale⁻¹), result = W⁻¹.
    let scale_inv = cholesky(&post_scale, "posterior inverse-Wishart scale")?.inverse();
    let mut scale_inv = scale_inv;
    symmetrize(&mut scale_inv);
    let l = cholesky(&scale_inv, "inverse posterior scale")?.l();
    let b = bartlett_factor(&l, dof, rng)?;
    // (B Bᵀ)⁻¹ = B⁻ᵀ B⁻¹; B is lower triangular.
    let b_inv = b
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::NotPd { what: "Wishart factor".into() })?;
    let mut draw = b_inv.transpose() * b_inv;
    symmetrize(&mut draw);
    cholesky(&draw, "inverse-Wishart draw")?;
    Ok(draw)
}
