use std::collections::BTreeMap;

use rayon::prelude::*;

use super::fit::{fit_with, FitSettings, ModelKind, SegmentFit};
use super::grid::{HyperGrid, HyperPoint};
use super::metric::mean;
use super::plan::{PartitionPlan, Segment};
use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// AE of one grid point at one lag on one segment (`segment` counts from 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeRow {
    pub point: HyperPoint,
    pub lag: usize,
    pub segment: usize,
    pub ae: f64,
}

/// Best grid point for one lag with its per-segment fits.
#[derive(Debug, Clone, PartialEq)]
pub struct LagSelection {
    pub lag: usize,
    pub point: HyperPoint,
    pub segment_ae: Vec<f64>,
    pub mean_ae: f64,
    pub fits: Vec<SegmentFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub kind: ModelKind,
    pub units: Vec<String>,
    pub predictor_names: Vec<String>,
    pub plan: PartitionPlan,
    /// Every `(lag, point, segment)` in lag, lexicographic point, segment order.
    pub rows: Vec<AeRow>,
    /// One entry per lag, ascending.
    pub selections: Vec<LagSelection>,
}

impl TuneReport {
    /// The lag whose selected point has the smallest mean AE.
    pub fn best_lag(&self) -> Option<&LagSelection> {
        self.selections.iter().min_by(|a, b| a.mean_ae.total_cmp(&b.mean_ae).then(a.lag.cmp(&b.lag)))
    }

    pub fn selection(&self, lag: usize) -> Option<&LagSelection> {
        self.selections.iter().find(|s| s.lag == lag)
    }
}

/// Chain seed of the fit of `point` at `lag` on `segment`. It depends only on
/// the job's content, never on its position in the grid, so reordering the
/// grid does not change any fit and a later refit reproduces it.
pub fn job_seed(settings: &FitSettings, lag: usize, segment: Segment, point: &HyperPoint) -> u64 {
    let key = point.effective_key(settings.components);
    derive_seed(
        settings.mcmc.seed,
        &[lag as u64, segment.start as u64, segment.end as u64, key[0], key[1], key[2], key[3]],
    )
}

/// Evaluate every grid point at every lag on every segment with the joint
/// model, and select per lag the point with the smallest mean AE (ties go to
/// the lexicographically first point).
pub fn grid_search(
    panel: &PanelDataset,
    plan: &PartitionPlan,
    grid: &HyperGrid,
    lags: &[usize],
    settings: &FitSettings,
) -> Result<TuneReport> {
    tune(ModelKind::Mbsts, panel, plan, grid, lags, settings)
}

/// [`grid_search`] with independent univariate models per unit.
pub fn bsts_tl_baseline(
    panel: &PanelDataset,
    plan: &PartitionPlan,
    grid: &HyperGrid,
    lags: &[usize],
    settings: &FitSettings,
) -> Result<TuneReport> {
    tune(ModelKind::Bsts, panel, plan, grid, lags, settings)
}

fn tune(
    kind: ModelKind,
    panel: &PanelDataset,
    plan: &PartitionPlan,
    grid: &HyperGrid,
    lags: &[usize],
    settings: &FitSettings,
) -> Result<TuneReport> {
    grid.validate()?;
    let mut lags = lags.to_vec();
    lags.sort_unstable();
    lags.dedup();
    if lags.is_empty() {
        return Err(Error::config("no lags to evaluate"));
    }
    plan.check_feasible(panel, &lags)?;
    settings.mcmc.validate()?;

    let points = grid.points();
    // Points differing only in coordinates of disabled components share a fit.
    let mut unique: BTreeMap<[u64; 4], usize> = BTreeMap::new();
    let owner: Vec<usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| *unique.entry(p.effective_key(settings.components)).or_insert(i))
        .collect();
    let mut reps: Vec<usize> = unique.values().copied().collect();
    reps.sort_unstable();

    let jobs: Vec<(usize, usize, usize)> = lags
        .iter()
        .flat_map(|&lag| reps.iter().flat_map(move |&p| (0..plan.len()).map(move |k| (lag, p, k))))
        .collect();
    log::info!("{} fits ({} distinct grid points, {} lags, {} segments)", jobs.len(), reps.len(), lags.len(), plan.len());
    let run = |lag: usize, p: usize, k: usize| -> Result<SegmentFit> {
        let segment = plan.segments[k];
        let mut local = *settings;
        local.mcmc.seed = job_seed(settings, lag, segment, &points[p]);
        fit_with(kind, panel, segment, lag, &points[p], &local)
    };
    let aes: Vec<f64> = jobs.par_iter().map(|&(lag, p, k)| run(lag, p, k).map(|f| f.ae)).collect::<Result<_>>()?;
    let ae_of: BTreeMap<(usize, usize, usize), f64> = jobs.iter().copied().zip(aes).collect();

    let mut rows = Vec::with_capacity(lags.len() * points.len() * plan.len());
    let mut selections = Vec::with_capacity(lags.len());
    for &lag in &lags {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (i, point) in points.iter().enumerate() {
            let seg_ae: Vec<f64> = (0..plan.len()).map(|k| ae_of[&(lag, owner[i], k)]).collect();
            for (k, &ae) in seg_ae.iter().enumerate() {
                rows.push(AeRow { point: *point, lag, segment: k + 1, ae });
            }
            let avg = mean(&seg_ae);
            if best.as_ref().is_none_or(|b| avg < b.2) {
                best = Some((i, seg_ae, avg));
            }
        }
        let (i, segment_ae, mean_ae) = best.expect("grid is non-empty");
        let fits: Vec<SegmentFit> =
            (0..plan.len())
            .into_par_iter()
            .map(|k| run(lag, owner[i], k).map(|f| SegmentFit { point: points[i], ..f }))
            .collect::<Result<_>>()?;
        selections.push(LagSelection { lag, point: points[i], segment_ae, mean_ae, fits });
    }
    Ok(TuneReport {
        kind,
        units: panel.units.clone(),
        predictor_names: panel.predictor_names.clone(),
        plan: plan.clone(),
        rows,
        selections,
    })
}
