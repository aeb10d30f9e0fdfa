use nalgebra::DVector;
use serde::Serialize;

use super::chain::PosteriorDraws;
use crate::error::{Error, Result};

/// Posterior summary of one coefficient `β_{m,j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub series: usize,
    pub predictor: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub inclusion_prob: f64,
}

/// Linear-interpolation quantile of sorted data (`q ∈ [0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Central interval `[q(½ − level/2), q(½ + level/2)]` of `values`.
pub fn central_interval(values: &[f64], level: f64) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    (quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("credible level must lie in (0, 1), got {level}")))
    }
}

/// Mean, central credible interval and inclusion probability for every
/// `(series, predictor)`. Draws in which the predictor was excluded enter
/// the distribution as exact zeros.
pub fn coefficient_summary(draws: &PosteriorDraws, level: f64) -> Result<Vec<CoefficientSummary>> {
    if draws.is_empty() {
        return Err(Error::Empty("posterior draw set".into()));
    }
    check_level(level)?;
    let n = draws.len() as f64;
    let mut out = Vec::new();
    for m in 0..draws.num_series() {
        for j in 0..draws.num_predictors {
            let values: Vec<f64> = draws.draws.iter().map(|d| d.beta[m][j]).collect();
            let included = draws.draws.iter().filter(|d| d.gamma[m].0[j]).count();
            let (lower, upper) = central_interval(&values, level);
            out.push(CoefficientSummary {
                series: m,
                predictor: j,
                mean: values.iter().sum::<f64>() / n,
                lower,
                upper,
                inclusion_prob: included as f64 / n,
            });
        }
    }
    Ok(out)
}

/// Posterior one-step-ahead forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// Posterior mean of `E[y(T+1)]` across draws.
    pub mean: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

/// Propagate each draw's last state one step through the transition, add the
/// regression effect at `x_next[m]`, and summarise across draws.
pub fn one_step_forecast(draws: &PosteriorDraws, x_next: &[DVector<f64>], level: f64) -> Result<Forecast> {
    if draws.is_empty() {
        return Err(Error::Empty("posterior draw set".into()));
    }
    check_level(level)?;
    let m = draws.num_series();
    if x_next.len() != m || x_next.iter().any(|x| x.len() != draws.num_predictors) {
        return Err(Error::dim(format!("need {m} predictor vectors of length {}", draws.num_predictors)));
    }
    let per_draw: Vec<DVector<f64>> = draws
        .draws
        .iter()
        .map(|d| {
            let mut y = draws.regression_effect(d, x_next);
            if let Some(last) = d.states.last().filter(|s| !s.is_empty()) {
                let next = &draws.transition * last + &draws.state_intercept;
                y += &draws.observation * next;
            }
            y
        })
        .collect();
    let n = per_draw.len() as f64;
    let mean = per_draw.iter().fold(DVector::zeros(m), |acc, y| acc + y) / n;
    let mut lower = DVector::zeros(m);
    let mut upper = DVector::zeros(m);
    for s in 0..m {
        let vals: Vec<f64> = per_draw.iter().map(|y| y[s]).collect();
        let (lo, hi) = central_interval(&vals, level);
        lower[s] = lo;
        upper[s] = hi;
    }
    Ok(Forecast { mean, lower, upper })
}
