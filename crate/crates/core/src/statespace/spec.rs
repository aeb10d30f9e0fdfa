use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which structural components one target series carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesComponents {
    pub trend: bool,
    pub seasonal: bool,
    pub cycle: bool,
    pub regression: bool,
    /// Number of seasons `S_m`; only read when `seasonal` is set.
    pub seasons: usize,
}

impl SeriesComponents {
    pub fn all(seasons: usize) -> Self {
        Self { trend: true, seasonal: true, cycle: true, regression: true, seasons }
    }

    pub fn any(&self) -> bool {
        self.trend || self.seasonal || self.cycle || self.regression
    }

    pub fn has_state(&self) -> bool {
        self.trend || self.seasonal || self.cycle
    }
}

/// Component selection and hyper-parameters for `M` target series.
///
/// `rho`, `damping` and `frequency` are shared across series; the slope
/// target `long_term_slope` and the season count may differ per series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub series: Vec<SeriesComponents>,
    pub rho: f64,
    pub long_term_slope: Vec<f64>,
    pub damping: f64,
    pub frequency: f64,
}

impl ComponentSpec {
    /// Same components and season count on every series, `D̃ = 0`.
    pub fn uniform(
        m: usize,
        components: SeriesComponents,
        rho: f64,
        damping: f64,
        frequency: f64,
    ) -> Self {
        Self {
            series: vec![components; m],
            rho,
            long_term_slope: vec![0.0; m],
            damping,
            frequency,
        }
    }

    pub fn num_series(&self) -> usize {
        self.series.len()
    }

    pub fn with_seasons(mut self, seasons: usize) -> Self {
        for s in &mut self.series {
            s.seasons = seasons;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::config("component spec has no series"));
        }
        if self.long_term_slope.len() != self.series.len() {
            return Err(Error::dim(format!(
                "long_term_slope has {} entries for {} series",
                self.long_term_slope.len(),
                self.series.len()
            )));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::config(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::config(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if !(0.0..=PI).contains(&self.frequency) {
            return Err(Error::config(format!("frequency must lie in [0, pi], got {}", self.frequency)));
        }
        if self.long_term_slope.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("long_term_slope must be finite"));
        }
        for (m, s) in self.series.iter().enumerate() {
            if !s.any() {
                return Err(Error::config(format!("series {m} has no component enabled")));
            }
            if s.seasonal && s.seasons < 2 {
                return Err(Error::config(format!("series {m}: seasons must be >= 2, got {}", s.seasons)));
            }
        }
        Ok(())
    }

    pub(crate) fn indices(&self, pick: impl Fn(&SeriesComponents) -> bool) -> Vec<usize> {
        self.series.iter().enumerate().filter(|(_, s)| pick(s)).map(|(m, _)| m).collect()
    }
}

/// Shock covariances for every component plus the observation noise.
///
/// Each component matrix is square over the series that carry the
/// component, in series order: `level`/`slope` over trend series,
/// `seasonal` over seasonal series, `cycle` over cycle series (shared by
/// `κ̃` and `κ̃*`). `observation` is `M × M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    pub level: DMatrix<f64>,
    pub slope: DMatrix<f64>,
    pub seasonal: DMatrix<f64>,
    pub cycle: DMatrix<f64>,
    pub observation: DMatrix<f64>,
}

impl CovarianceSet {
    /// Scaled identities of the right sizes for `spec`.
    pub fn isotropic(spec: &ComponentSpec, state_var: f64, obs_var: f64) -> Self {
        let kt = spec.indices(|s| s.trend).len();
        let ks = spec.indices(|s| s.seasonal).len();
        let kc = spec.indices(|s| s.cycle).len();
        let m = spec.num_series();
        Self {
            level: DMatrix::identity(kt, kt) * state_var,
            slope: DMatrix::identity(kt, kt) * state_var,
            seasonal: DMatrix::identity(ks, ks) * state_var,
            cycle: DMatrix::identity(kc, kc) * state_var,
            observation: DMatrix::identity(m, m) * obs_var,
        }
    }

    pub fn zeros(spec: &ComponentSpec) -> Self {
        Self::isotropic(spec, 0.0, 0.0)
    }

    pub fn get(&self, kind: ShockKind) -> &DMatrix<f64> {
        match kind {
            ShockKind::Level => &self.level,
            ShockKind::Slope => &self.slope,
            ShockKind::Seasonal => &self.seasonal,
            ShockKind::Cycle => &self.cycle,
        }
    }

    pub fn get_mut(&mut self, kind: ShockKind) -> &mut DMatrix<f64> {
        match kind {
            ShockKind::Level => &mut self.level,
            ShockKind::Slope => &mut self.slope,
            ShockKind::Seasonal => &mut self.seasonal,
            ShockKind::Cycle => &mut self.cycle,
        }
    }
}

/// The four state-shock covariance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShockKind {
    Level,
    Slope,
    Seasonal,
    Cycle,
}

impl ShockKind {
    pub const ALL: [ShockKind; 4] = [ShockKind::Level, ShockKind::Slope, ShockKind::Seasonal, ShockKind::Cycle];

    pub fn name(self) -> &'static str {
        match self {
            ShockKind::Level => "level",
            ShockKind::Slope => "slope",
            ShockKind::Seasonal => "seasonal",
            ShockKind::Cycle => "cycle",
        }
    }
}
