use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::fit::{ModelKind, SegmentFit};
use super::plan::PartitionPlan;
use super::tune::TuneReport;
use crate::error::{Error, Result};

/// 1-based position of a fit's segment in `plan`.
fn segment_index(plan: &PartitionPlan, fit: &SegmentFit) -> Result<usize> {
    plan.segments
        .iter()
        .position(|s| *s == fit.segment)
        .map(|i| i + 1)
        .ok_or_else(|| Error::config(format!("segment {} is not part of the partition", fit.segment)))
}

fn name(names: &[String], i: usize) -> String {
    names.get(i).cloned().unwrap_or_else(|| i.to_string())
}

/// Columns `rho,S,varrho,lambda,lag,segment,ae`.
pub fn write_ae_csv<W: Write>(report: &TuneReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rho", "S", "varrho", "lambda", "lag", "segment", "ae"])?;
    for r in &report.rows {
        w.write_record([
            r.point.rho.to_string(),
            r.point.seasons.to_string(),
            r.point.damping.to_string(),
            r.point.frequency.to_string(),
            r.lag.to_string(),
            r.segment.to_string(),
            r.ae.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `segment,series,predictor,mean,lower,upper,inclusion_prob,lag`.
pub fn write_coefficients_csv<W: Write>(
    fits: &[SegmentFit],
    plan: &PartitionPlan,
    units: &[String],
    predictors: &[String],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["segment", "series", "predictor", "mean", "lower", "upper", "inclusion_prob", "lag"])?;
    for fit in fits {
        let k = segment_index(plan, fit)?;
        for c in &fit.coefficients {
            w.write_record([
                k.to_string(),
                name(units, c.series),
                name(predictors, c.predictor),
                c.mean.to_string(),
                c.lower.to_string(),
                c.upper.to_string(),
                c.inclusion_prob.to_string(),
                fit.lag.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `segment,start,end,series,lag,truth,mean,lower,upper,ae`, one row
/// per unit and segment; `ae` is the segment's error, repeated per unit.
pub fn write_predictions_csv<W: Write>(fits: &[SegmentFit], plan: &PartitionPlan, units: &[String], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["segment", "start", "end", "series", "lag", "truth", "mean", "lower", "upper", "ae"])?;
    for fit in fits {
        let k = segment_index(plan, fit)?;
        for m in 0..fit.truth.len() {
            w.write_record([
                k.to_string(),
                fit.segment.start.to_string(),
                fit.segment.end.to_string(),
                name(units, m),
                fit.lag.to_string(),
                fit.truth[m].to_string(),
                fit.prediction.mean[m].to_string(),
                fit.prediction.lower[m].to_string(),
                fit.prediction.upper[m].to_string(),
                fit.ae.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Selected point per lag: `lag,rho,S,varrho,lambda,mean_ae`.
pub fn write_selection_csv<W: Write>(report: &TuneReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lag", "rho", "S", "varrho", "lambda", "mean_ae"])?;
    for s in &report.selections {
        w.write_record([
            s.lag.to_string(),
            s.point.rho.to_string(),
            s.point.seasons.to_string(),
            s.point.damping.to_string(),
            s.point.frequency.to_string(),
            s.mean_ae.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Predictor with the largest absolute posterior-mean coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominantPredictor {
    pub segment: usize,
    pub series: String,
    pub predictor: String,
    pub coefficient: f64,
    pub lag: usize,
}

/// Per segment and unit, the dominant predictor; the first one wins ties.
pub fn dominant_predictors(
    fits: &[SegmentFit],
    plan: &PartitionPlan,
    units: &[String],
    predictors: &[String],
) -> Result<Vec<DominantPredictor>> {
    let mut out = Vec::new();
    for fit in fits {
        let k = segment_index(plan, fit)?;
        for m in 0..fit.truth.len() {
            let best = fit
                .coefficients
                .iter()
                .filter(|c| c.series == m)
                .fold(None, |acc: Option<&crate::sampler::CoefficientSummary>, c| match acc {
                    Some(b) if b.mean.abs() >= c.mean.abs() => Some(b),
                    _ => Some(c),
                });
            if let Some(c) = best {
                out.push(DominantPredictor {
                    segment: k,
                    series: name(units, m),
                    predictor: name(predictors, c.predictor),
                    coefficient: c.mean,
                    lag: fit.lag,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_dominant_csv<W: Write>(rows: &[DominantPredictor], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["segment", "series", "predictor", "coefficient", "lag"])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-lag AE of the selected point on each segment and on average, three
/// decimals.
pub fn summary_table(report: &TuneReport) -> String {
    let title = match report.kind {
        ModelKind::Mbsts => "MBSTS-TL",
        ModelKind::Bsts => "BSTS-TL",
    };
    let mut out = String::new();
    let _ = writeln!(out, "{title} normalized AE of the selected hyper-parameters");
    let mut header = format!("{:>4} {:>5} {:>3} {:>6} {:>6}", "lag", "rho", "S", "varrho", "lambda");
    for s in &report.plan.segments {
        let _ = write!(header, " {:>9}", s.to_string());
    }
    let _ = write!(header, " {:>8}", "average");
    let _ = writeln!(out, "{header}");
    for sel in &report.selections {
        let p = sel.point;
        let mut line = format!("{:>4} {:>5} {:>3} {:>6} {:>6.3}", sel.lag, p.rho, p.seasons, p.damping, p.frequency);
        for ae in &sel.segment_ae {
            let _ = write!(line, " {:>9.3}", ae);
        }
        let _ = write!(line, " {:>8.3}", sel.mean_ae);
        let _ = writeln!(out, "{line}");
    }
    if let Some(best) = report.best_lag() {
        let _ = writeln!(out, "best lag: {} (average AE {:.3})", best.lag, best.mean_ae);
    }
    out
}
