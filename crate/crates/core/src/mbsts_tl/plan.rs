use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::PanelDataset;
use crate::error::{Error, Result};

/// Inclusive week range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub start: i64,
    pub end: i64,
}

impl Segment {
    pub fn new(start: i64, end: i64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    /// Number of training pairs at `lag`.
    pub fn training_pairs(&self, lag: usize) -> i64 {
        self.end - self.start - lag as i64
    }

    pub fn check_lag(&self, lag: usize) -> Result<()> {
        if self.len() > lag + 2 {
            Ok(())
        } else {
            Err(Error::SegmentTooShort { start: self.start, end: self.end, lag })
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

impl FromStr for Segment {
    type Err = Error;

    /// `start:end`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::config(format!("segment '{s}' must be written start:end")))?;
        let parse = |v: &str| v.trim().parse::<i64>().map_err(|e| Error::config(format!("segment '{s}': {e}")));
        Ok(Segment::new(parse(a)?, parse(b)?))
    }
}

/// Non-overlapping, strictly increasing segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub segments: Vec<Segment>,
}

impl PartitionPlan {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::config("partition has no segments"));
        }
        for s in &segments {
            if s.is_empty() {
                return Err(Error::config(format!("segment {s} ends before it starts")));
            }
        }
        for w in segments.windows(2) {
            if w[1].start <= w[0].end {
                return Err(Error::config(format!("segments {} and {} overlap or are out of order", w[0], w[1])));
            }
        }
        Ok(Self { segments })
    }

    /// The three 2020 segments `[9,22], [23,37], [38,53]`.
    pub fn weekly_2020() -> Self {
        Self { segments: vec![Segment::new(9, 22), Segment::new(23, 37), Segment::new(38, 53)] }
    }

    /// [`PartitionPlan::weekly_2020`] for a panel spanning weeks 1 to 53.
    pub fn default_for(panel: &PanelDataset) -> Result<Self> {
        if panel.first_week == 1 && panel.last_week() == 53 {
            Ok(Self::weekly_2020())
        } else {
            Err(Error::config(format!(
                "no default partition for weeks {}..{}; supply segments explicitly",
                panel.first_week,
                panel.last_week()
            )))
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Every segment inside the panel and long enough for every lag.
    pub fn check_feasible(&self, panel: &PanelDataset, lags: &[usize]) -> Result<()> {
        for s in &self.segments {
            check_in_panel(*s, panel)?;
            for &lag in lags {
                s.check_lag(lag)?;
            }
        }
        Ok(())
    }
}

impl FromStr for PartitionPlan {
    type Err = Error;

    /// Comma-separated `start:end` list.
    fn from_str(s: &str) -> Result<Self> {
        let segments = s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
        Self::new(segments)
    }
}

fn check_in_panel(segment: Segment, panel: &PanelDataset) -> Result<()> {
    if segment.start < panel.first_week || segment.end > panel.last_week() {
        return Err(Error::SegmentOutOfRange {
            start: segment.start,
            end: segment.end,
            min: panel.first_week,
            max: panel.last_week(),
        });
    }
    Ok(())
}

/// Training pairs and held-out endpoint of one segment at one lag.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSegment {
    pub segment: Segment,
    pub lag: usize,
    /// Per unit, rows for weeks `start ..= end − 1 − lag`.
    pub x_train: Vec<DMatrix<f64>>,
    /// Rows for weeks `start + lag ..= end − 1`.
    pub y_train: DMatrix<f64>,
    /// Per unit, predictors at week `end − lag`.
    pub x_predict: Vec<DVector<f64>>,
    /// Outcomes at week `end`.
    pub y_truth: DVector<f64>,
}

impl AlignedSegment {
    pub fn num_pairs(&self) -> usize {
        self.y_train.nrows()
    }

    /// Weeks covered by `x_train` and by `y_train`.
    pub fn train_weeks(&self) -> ((i64, i64), (i64, i64)) {
        let lag = self.lag as i64;
        let s = self.segment;
        ((s.start, s.end - 1 - lag), (s.start + lag, s.end - 1))
    }
}

/// Pair `X(t − lag)` with `Y(t)` inside `segment`, holding out `Y(end)`.
pub fn lag_align(segment: Segment, lag: usize, panel: &PanelDataset) -> Result<AlignedSegment> {
    check_in_panel(segment, panel)?;
    segment.check_lag(lag)?;
    let x_first = panel.row(segment.start).expect("checked");
    let pairs = segment.training_pairs(lag) as usize;
    let y_first = x_first + lag;
    let end = panel.row(segment.end).expect("checked");
    Ok(AlignedSegment {
        segment,
        lag,
        x_train: panel.x.iter().map(|x| x.rows(x_first, pairs).into_owned()).collect(),
        y_train: panel.y.rows(y_first, pairs).into_owned(),
        x_predict: panel.predictors_at(end - lag),
        y_truth: panel.y.row(end).transpose(),
    })
}

/// Column centring and scaling of one unit's predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: Vec<f64>,
    /// Population standard deviation; `1` for constant columns.
    pub scale: Vec<f64>,
}

impl Scaling {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(mu);
            scale.push(if sd > 1e-12 * (1.0 + mu.abs()) { sd } else { 1.0 });
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| (x[(r, c)] - self.mean[c]) / self.scale[c])
    }

    pub fn apply_row(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |c, _| (x[c] - self.mean[c]) / self.scale[c])
    }
}

impl AlignedSegment {
    /// Z-score every unit's predictors on its training rows and apply the same
    /// transform to the prediction row.
    pub fn standardized(&self) -> (AlignedSegment, Vec<Scaling>) {
        let scalings: Vec<Scaling> = self.x_train.iter().map(Scaling::fit).collect();
        let out = AlignedSegment {
            x_train: self.x_train.iter().zip(&scalings).map(|(x, s)| s.apply(x)).collect(),
            x_predict: self.x_predict.iter().zip(&scalings).map(|(x, s)| s.apply_row(x)).collect(),
            ..self.clone()
        };
        (out, scalings)
    }
}
