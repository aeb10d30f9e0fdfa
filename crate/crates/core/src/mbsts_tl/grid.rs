use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statespace::{ComponentSpec, SeriesComponents};

/// One `(ρ, S, ϱ, λ)` candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPoint {
    pub rho: f64,
    pub seasons: usize,
    pub damping: f64,
    pub frequency: f64,
}

impl HyperPoint {
    /// Lexicographic order on `(ρ, S, ϱ, λ)`.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.rho
            .total_cmp(&other.rho)
            .then(self.seasons.cmp(&other.seasons))
            .then(self.damping.total_cmp(&other.damping))
            .then(self.frequency.total_cmp(&other.frequency))
    }

    /// Components for `m` series sharing `template` (whose season count is
    /// replaced by `S`).
    pub fn spec(&self, m: usize, template: SeriesComponents, long_term_slope: f64) -> ComponentSpec {
        let mut spec = ComponentSpec::uniform(m, template, self.rho, self.damping, self.frequency).with_seasons(self.seasons);
        spec.long_term_slope = vec![long_term_slope; m];
        spec
    }

    /// The point with coordinates of disabled components zeroed: two points
    /// with the same key define the same model.
    pub(crate) fn effective_key(&self, template: SeriesComponents) -> [u64; 4] {
        [
            if template.trend { self.rho.to_bits() } else { 0 },
            if template.seasonal { self.seasons as u64 } else { 0 },
            if template.cycle { self.damping.to_bits() } else { 0 },
            if template.cycle { self.frequency.to_bits() } else { 0 },
        ]
    }
}

/// Candidate values for each hyper-parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub rho: Vec<f64>,
    pub seasons: Vec<usize>,
    pub damping: Vec<f64>,
    pub frequency: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            rho: vec![0.2, 0.4, 0.6, 0.8],
            seasons: vec![3, 4, 5, 6, 8, 10, 12],
            damping: vec![0.1, 0.2, 0.4, 0.6, 0.8, 0.9],
            frequency: vec![0.0, FRAC_PI_2, PI],
        }
    }
}

impl HyperGrid {
    pub fn singleton(point: HyperPoint) -> Self {
        Self {
            rho: vec![point.rho],
            seasons: vec![point.seasons],
            damping: vec![point.damping],
            frequency: vec![point.frequency],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.is_empty() || self.seasons.is_empty() || self.damping.is_empty() || self.frequency.is_empty() {
            return Err(Error::config("every grid axis needs at least one value"));
        }
        if let Some(v) = self.rho.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(Error::config(format!("grid rho value {v} outside (0, 1]")));
        }
        if let Some(v) = self.seasons.iter().find(|v| **v < 2) {
            return Err(Error::config(format!("grid S value {v} must be at least 2")));
        }
        if let Some(v) = self.damping.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::config(format!("grid varrho value {v} outside (0, 1)")));
        }
        if let Some(v) = self.frequency.iter().find(|v| !(0.0..=PI).contains(*v)) {
            return Err(Error::config(format!("grid lambda value {v} outside [0, pi]")));
        }
        Ok(())
    }

    /// Distinct points of the Cartesian product in lexicographic order.
    pub fn points(&self) -> Vec<HyperPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &rho in &self.rho {
            for &seasons in &self.seasons {
                for &damping in &self.damping {
                    for &frequency in &self.frequency {
                        out.push(HyperPoint { rho, seasons, damping, frequency });
                    }
                }
            }
        }
        out.sort_by(HyperPoint::lex_cmp);
        out.dedup_by(|a, b| a.lex_cmp(b) == Ordering::Equal);
        out
    }

    pub fn len(&self) -> usize {
        self.rho.len() * self.seasons.len() * self.damping.len() * self.frequency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parse a list of grid values; `pi` and `pi/N` are accepted.
pub fn parse_grid_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            let v = v.trim();
            let lower = v.to_ascii_lowercase();
            if lower == "pi" {
                return Ok(PI);
            }
            if let Some(div) = lower.strip_prefix("pi/") {
                let d: f64 = div.parse().map_err(|_| Error::config(format!("bad grid value '{v}'")))?;
                return Ok(PI / d);
            }
            v.parse().map_err(|_| Error::config(format!("bad grid value '{v}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_504_points() {
        let g = HyperGrid::default();
        g.validate().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 504);
        assert!(pts.windows(2).all(|w| w[0].lex_cmp(&w[1]) == Ordering::Less));
    }

    #[test]
    fn parses_pi_forms() {
        assert_eq!(parse_grid_values("0,pi/2,pi").unwrap(), vec![0.0, FRAC_PI_2, PI]);
        assert!(parse_grid_values("x").is_err());
    }
}
