use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Predictor columns of the state-level application, in file order.
pub const DEFAULT_PREDICTORS: [&str; 7] = ["si", "driving", "walking", "transit", "rad", "nsad", "psad"];

/// Aligned weekly panel: `M` units observed over contiguous weeks.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    /// Unit identifiers, sorted.
    pub units: Vec<String>,
    pub first_week: i64,
    pub predictor_names: Vec<String>,
    /// `T × M` outcome matrix.
    pub y: DMatrix<f64>,
    /// Per unit, `T × d` predictors.
    pub x: Vec<DMatrix<f64>>,
}

impl PanelDataset {
    pub fn new(
        units: Vec<String>,
        first_week: i64,
        predictor_names: Vec<String>,
        y: DMatrix<f64>,
        x: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let panel = Self { units, first_week, predictor_names, y, x };
        panel.validate()?;
        Ok(panel)
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn num_weeks(&self) -> usize {
        self.y.nrows()
    }

    pub fn num_predictors(&self) -> usize {
        self.predictor_names.len()
    }

    pub fn last_week(&self) -> i64 {
        self.first_week + self.num_weeks() as i64 - 1
    }

    pub fn weeks(&self) -> std::ops::RangeInclusive<i64> {
        self.first_week..=self.last_week()
    }

    /// Row index of `week`, if inside the panel.
    pub fn row(&self, week: i64) -> Option<usize> {
        self.weeks().contains(&week).then(|| (week - self.first_week) as usize)
    }

    pub fn predictors_at(&self, row: usize) -> Vec<DVector<f64>> {
        self.x.iter().map(|x| x.row(row).transpose()).collect()
    }

    /// Single-unit sub-panel.
    pub fn unit(&self, m: usize) -> PanelDataset {
        PanelDataset {
            units: vec![self.units[m].clone()],
            first_week: self.first_week,
            predictor_names: self.predictor_names.clone(),
            y: self.y.columns(m, 1).into_owned(),
            x: vec![self.x[m].clone()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.units.len();
        if m == 0 {
            return Err(Error::validation("panel has no units"));
        }
        if self.y.ncols() != m || self.x.len() != m {
            return Err(Error::validation(format!(
                "{} units but {} outcome columns and {} predictor blocks",
                m,
                self.y.ncols(),
                self.x.len()
            )));
        }
        if self.y.nrows() == 0 {
            return Err(Error::validation("panel has no weeks"));
        }
        let mut seen = HashSet::new();
        for u in &self.units {
            if !seen.insert(u) {
                return Err(Error::validation(format!("duplicate unit '{u}'")));
            }
        }
        if self.units.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::validation("units must be sorted lexicographically"));
        }
        let mut names = HashSet::new();
        for n in &self.predictor_names {
            if !names.insert(n) {
                return Err(Error::validation(format!("duplicate predictor column '{n}'")));
            }
        }
        let d = self.predictor_names.len();
        for (j, unit) in self.units.iter().enumerate() {
            let x = &self.x[j];
            if x.nrows() != self.y.nrows() || x.ncols() != d {
                return Err(Error::validation(format!("unit {unit}: predictor block is {} x {}", x.nrows(), x.ncols())));
            }
            for t in 0..self.y.nrows() {
                let week = self.first_week + t as i64;
                if !self.y[(t, j)].is_finite() {
                    return Err(Error::validation(format!("missing case_rate for unit {unit}, week {week}")));
                }
                for (k, name) in self.predictor_names.iter().enumerate() {
                    check_value(name, x[(t, k)], unit, week)?;
                }
            }
        }
        Ok(())
    }
}

/// Range rules for the named index columns.
pub(crate) fn check_value(column: &str, value: f64, unit: &str, week: i64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::validation(format!("missing {column} for unit {unit}, week {week}")));
    }
    let range = match column {
        "si" => Some((0.0, 100.0)),
        "nsad" | "psad" => Some((0.0, 1.0)),
        _ => None,
    };
    if let Some((lo, hi)) = range {
        if !(lo..=hi).contains(&value) {
            return Err(Error::validation(format!(
                "{column} = {value} outside [{lo}, {hi}] for unit {unit}, week {week}"
            )));
        }
    }
    Ok(())
}
