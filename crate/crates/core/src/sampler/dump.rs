//! Per-draw CSV export for external convergence diagnostics.
//!
//! One row per kept iteration. Columns, in order:
//!
//! * `iteration`
//! * `beta_{m}_{j}` and then `gamma_{m}_{j}` (0/1) for every series `m` and predictor `j`
//! * `intercept_{m}`
//! * `sigma_obs_{a}_{b}` for `a ≤ b`, then `sigma_level_*`, `sigma_slope_*`,
//!   `sigma_seasonal_*`, `sigma_cycle_*` over the series carrying each component
//!
//! Latent state trajectories are not exported.

use std::io::Write;

use nalgebra::DMatrix;

use super::chain::PosteriorDraws;
use crate::error::Result;
use crate::statespace::ShockKind;

fn upper_names(prefix: &str, k: usize, out: &mut Vec<String>) {
    for a in 0..k {
        for b in a..k {
            out.push(format!("{prefix}_{a}_{b}"));
        }
    }
}

fn upper_values(m: &DMatrix<f64>, out: &mut Vec<String>) {
    for a in 0..m.nrows() {
        for b in a..m.ncols() {
            out.push(m[(a, b)].to_string());
        }
    }
}

pub fn write_draws_csv<W: Write>(draws: &PosteriorDraws, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let m = draws.num_series();
    let d = draws.num_predictors;
    let mut header = vec!["iteration".to_string()];
    for s in 0..m {
        for j in 0..d {
            header.push(format!("beta_{s}_{j}"));
        }
    }
    for s in 0..m {
        for j in 0..d {
            header.push(format!("gamma_{s}_{j}"));
        }
    }
    for s in 0..m {
        header.push(format!("intercept_{s}"));
    }
    upper_names("sigma_obs", m, &mut header);
    if let Some(first) = draws.draws.first() {
        for kind in ShockKind::ALL {
            upper_names(&format!("sigma_{}", kind.name()), first.covariances.get(kind).nrows(), &mut header);
        }
    }
    w.write_record(&header)?;
    for draw in &draws.draws {
        let mut row = vec![draw.iteration.to_string()];
        row.extend(draw.beta.iter().flat_map(|b| b.iter().map(|v| v.to_string())));
        row.extend(draw.gamma.iter().flat_map(|g| g.0.iter().map(|&v| u8::from(v).to_string())));
        row.extend(draw.intercept.iter().map(|v| v.to_string()));
        upper_values(&draw.covariances.observation, &mut row);
        for kind in ShockKind::ALL {
            upper_values(draw.covariances.get(kind), &mut row);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
