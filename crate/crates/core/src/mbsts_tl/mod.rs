//! Segment-wise training and one-step evaluation with lagged predictors,
//! grid-search tuning, and the univariate baseline.

mod fit;
mod grid;
mod metric;
mod plan;
mod report;
mod tune;

pub use fit::{fit_segment, fit_segment_univariate, fit_segment_with_draws, fit_with, FitSettings, ModelKind, SegmentFit};
pub use grid::{parse_grid_values, HyperGrid, HyperPoint};
pub use metric::{mean, normalized_ae, segment_ae};
pub use plan::{lag_align, AlignedSegment, PartitionPlan, Scaling, Segment};
pub use report::{
    dominant_predictors, summary_table, write_ae_csv, write_coefficients_csv, write_dominant_csv,
    write_predictions_csv, write_selection_csv, DominantPredictor,
};
pub use tune::{bsts_tl_baseline, grid_search, job_seed, AeRow, LagSelection, TuneReport};
