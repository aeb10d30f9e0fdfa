use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::grid::HyperPoint;
use super::metric::segment_ae;
use super::plan::{lag_align, Scaling, Segment};
use crate::data::PanelDataset;
use crate::error::Result;
use crate::rng::derive_seed;
use crate::sampler::{
    coefficient_summary, one_step_forecast, run_mcmc, CoefficientSummary, Forecast, McmcConfig, ModelPriors,
    PosteriorDraws, PriorConfig, TrainingData,
};
use crate::statespace::SeriesComponents;

/// Everything a segment fit needs besides the data and the grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    /// Component template; its season count is taken from the grid point.
    pub components: SeriesComponents,
    pub long_term_slope: f64,
    pub priors: PriorConfig,
    pub mcmc: McmcConfig,
    /// Credible level for intervals.
    pub level: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            components: SeriesComponents::all(4),
            long_term_slope: 0.0,
            priors: PriorConfig::default(),
            mcmc: McmcConfig::default(),
            level: 0.95,
        }
    }
}

/// Whether the target series share one joint model or are fitted separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mbsts,
    Bsts,
}

/// Outcome of training on one segment and predicting its endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFit {
    pub segment: Segment,
    pub lag: usize,
    pub point: HyperPoint,
    pub prediction: Forecast,
    pub truth: DVector<f64>,
    pub ae: f64,
    /// On the standardized predictor scale; see `scalings`.
    pub coefficients: Vec<CoefficientSummary>,
    pub scalings: Vec<Scaling>,
    pub jitter_events: usize,
}

/// Train the joint model on the lag-aligned rows of `segment` and forecast
/// `Y(end)` from `X(end − lag)` with the posterior mean.
pub fn fit_segment(
    panel: &PanelDataset,
    segment: Segment,
    lag: usize,
    point: &HyperPoint,
    settings: &FitSettings,
) -> Result<SegmentFit> {
    fit_segment_with_draws(panel, segment, lag, point, settings).map(|(fit, _)| fit)
}

/// [`fit_segment`], also returning the posterior sample (final states only).
pub fn fit_segment_with_draws(
    panel: &PanelDataset,
    segment: Segment,
    lag: usize,
    point: &HyperPoint,
    settings: &FitSettings,
) -> Result<(SegmentFit, PosteriorDraws)> {
    let (aligned, scalings) = lag_align(segment, lag, panel)?.standardized();
    let m = panel.num_units();
    let spec = point.spec(m, settings.components, settings.long_term_slope);
    let data = TrainingData::new(aligned.y_train.clone(), aligned.x_train.clone())?;
    let priors = ModelPriors::from_data(&spec, &data.y, data.num_predictors(), &settings.priors)?;
    let mcmc = McmcConfig { keep_paths: false, ..settings.mcmc };
    let draws = run_mcmc(&data, &spec, &priors, &mcmc)?;
    let prediction = one_step_forecast(&draws, &aligned.x_predict, settings.level)?;
    let ae = segment_ae(&prediction.mean, &aligned.y_truth, &segment.to_string())?;
    let fit = SegmentFit {
        segment,
        lag,
        point: *point,
        coefficients: coefficient_summary(&draws, settings.level)?,
        prediction,
        truth: aligned.y_truth,
        ae,
        scalings,
        jitter_events: draws.jitter_events,
    };
    Ok((fit, draws))
}

/// Baseline: one independent univariate fit per unit with the same protocol,
/// combined into a single prediction vector and error.
pub fn fit_segment_univariate(
    panel: &PanelDataset,
    segment: Segment,
    lag: usize,
    point: &HyperPoint,
    settings: &FitSettings,
) -> Result<SegmentFit> {
    let m = panel.num_units();
    let mut fits = Vec::with_capacity(m);
    for s in 0..m {
        let mut local = *settings;
        local.mcmc.seed = derive_seed(settings.mcmc.seed, &[s as u64]);
        fits.push(fit_segment(&panel.unit(s), segment, lag, point, &local)?);
    }
    let collect = |f: &dyn Fn(&SegmentFit) -> f64| DVector::from_iterator(m, fits.iter().map(f));
    let prediction = Forecast {
        mean: collect(&|f| f.prediction.mean[0]),
        lower: collect(&|f| f.prediction.lower[0]),
        upper: collect(&|f| f.prediction.upper[0]),
    };
    let truth = collect(&|f| f.truth[0]);
    let ae = segment_ae(&prediction.mean, &truth, &segment.to_string())?;
    let mut coefficients = Vec::new();
    let mut scalings = Vec::with_capacity(m);
    let mut jitter_events = 0;
    for (s, f) in fits.into_iter().enumerate() {
        coefficients.extend(f.coefficients.into_iter().map(|c| CoefficientSummary { series: s, ..c }));
        scalings.extend(f.scalings);
        jitter_events += f.jitter_events;
    }
    Ok(SegmentFit { segment, lag, point: *point, prediction, truth, ae, coefficients, scalings, jitter_events })
}

/// [`fit_segment`] or [`fit_segment_univariate`] by `kind`.
pub fn fit_with(
    kind: ModelKind,
    panel: &PanelDataset,
    segment: Segment,
    lag: usize,
    point: &HyperPoint,
    settings: &FitSettings,
) -> Result<SegmentFit> {
    match kind {
        ModelKind::Mbsts => fit_segment(panel, segment, lag, point, settings),
        ModelKind::Bsts => fit_segment_univariate(panel, segment, lag, point, settings),
    }
}
