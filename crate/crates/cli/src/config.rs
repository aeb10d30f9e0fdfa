//! Run configuration: defaults, overridden by a config file, overridden by
//! flags. The resolved configuration is written next to the outputs and can be
//! passed back through `--config` to repeat the run.

use std::fs;
use std::path::{Path, PathBuf};

use mbsts::mbsts_tl::{parse_grid_values, FitSettings, HyperGrid};
use mbsts::SeriesComponents;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::ModelArgs;
use crate::{usage, CliResult};

pub const SNAPSHOT_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareConfig {
    pub command: String,
    pub out: Option<PathBuf>,
    pub synthetic: bool,
    #[serde(rename = "M")]
    pub units: usize,
    #[serde(rename = "d")]
    pub predictors: usize,
    #[serde(rename = "T")]
    pub weeks: usize,
    pub true_lag: usize,
    pub seed: u64,
    pub truth: Option<PathBuf>,
    pub sources: Vec<String>,
    pub indices: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub refresh: bool,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        Self {
            command: "prepare".into(),
            out: None,
            synthetic: false,
            units: 3,
            predictors: 7,
            weeks: 53,
            true_lag: 1,
            seed: 0,
            truth: None,
            sources: vec!["jhu".into(), "oxcgrt".into()],
            indices: None,
            population: None,
            cache_dir: PathBuf::from("mbsts-cache"),
            refresh: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub command: String,
    pub panel: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// `start:end` list; weeks 9..53 split in three when unset.
    pub segments: Option<String>,
    pub lags: Vec<usize>,
    pub grid: HyperGrid,
    pub baseline: bool,
    pub jobs: Option<usize>,
    pub model: FitSettings,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            command: "tune".into(),
            panel: None,
            out_dir: None,
            segments: None,
            lags: vec![0, 1, 2],
            grid: HyperGrid::default(),
            baseline: false,
            jobs: None,
            model: FitSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub command: String,
    pub panel: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub segments: Option<String>,
    pub lag: Option<usize>,
    pub rho: Option<f64>,
    #[serde(rename = "S")]
    pub seasons: Option<usize>,
    pub varrho: Option<f64>,
    pub lambda: Option<f64>,
    pub from_tune: Option<PathBuf>,
    pub dominant: bool,
    pub dump_draws: bool,
    pub baseline: bool,
    pub jobs: Option<usize>,
    pub model: FitSettings,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            command: "fit".into(),
            panel: None,
            out_dir: None,
            segments: None,
            lag: None,
            rho: None,
            seasons: None,
            varrho: None,
            lambda: None,
            from_tune: None,
            dominant: false,
            dump_draws: false,
            baseline: false,
            jobs: None,
            model: FitSettings::default(),
        }
    }
}

fn check_command(path: &Path, found: Option<&str>, command: &str) -> CliResult<()> {
    match found {
        Some(c) if c != command => Err(usage(format!("config {} is for '{c}', not '{command}'", path.display()))),
        _ => Ok(()),
    }
}

/// Read a TOML (by extension) or JSON config file for `command`.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let bad = |e: &dyn std::fmt::Display| usage(format!("config {}: {e}", path.display()));
    // the command is checked first so a config for another subcommand is
    // reported as such rather than as a list of unknown fields
    let cfg: T = if is_toml {
        let value: toml::Table = toml::from_str(&text).map_err(|e| bad(&e))?;
        check_command(path, value.get("command").and_then(|c| c.as_str()), command)?;
        value.try_into().map_err(|e| bad(&e))?
    } else {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        check_command(path, value.get("command").and_then(|c| c.as_str()), command)?;
        serde_json::from_value(value).map_err(|e| bad(&e))?
    };
    Ok(cfg)
}

/// Pretty JSON with a trailing newline.
pub fn write_snapshot<T: Serialize>(cfg: &T, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(cfg).map_err(mbsts::Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

pub fn parse_components(names: &[String]) -> CliResult<SeriesComponents> {
    let mut c = SeriesComponents { trend: false, seasonal: false, cycle: false, regression: false, seasons: 0 };
    for name in names {
        match name.trim().to_ascii_lowercase().as_str() {
            "trend" => c.trend = true,
            "seasonal" => c.seasonal = true,
            "cycle" => c.cycle = true,
            "regression" => c.regression = true,
            "" => {}
            other => {
                return Err(usage(format!(
                    "unknown component '{other}' (expected trend, seasonal, cycle, regression)"
                )))
            }
        }
    }
    if !c.any() {
        return Err(usage("--components selects no component"));
    }
    Ok(c)
}

/// Apply the model flags on top of `settings`.
pub fn apply_model_args(settings: &mut FitSettings, jobs: &mut Option<usize>, a: &ModelArgs) -> CliResult<()> {
    if let Some(names) = &a.components {
        settings.components = parse_components(names)?;
    }
    set(&mut settings.long_term_slope, a.long_term_slope);
    set(&mut settings.mcmc.iterations, a.iterations);
    set(&mut settings.mcmc.burn_in, a.burn_in);
    set(&mut settings.mcmc.thinning, a.thinning);
    set(&mut settings.mcmc.seed, a.seed);
    set(&mut settings.level, a.level);
    set(&mut settings.priors.inclusion_prob, a.inclusion_prob);
    set_opt(&mut settings.priors.expected_model_size, a.expected_model_size);
    set(&mut settings.priors.slab_scale_factor, a.slab_scale_factor);
    set(&mut settings.priors.iw_extra_dof, a.iw_extra_dof);
    set(&mut settings.priors.iw_scale_factor, a.iw_scale_factor);
    set_opt(jobs, a.jobs);
    if !(settings.level > 0.0 && settings.level < 1.0) {
        return Err(usage(format!("--level must lie in (0, 1), got {}", settings.level)));
    }
    if !(settings.priors.inclusion_prob > 0.0 && settings.priors.inclusion_prob < 1.0) {
        return Err(usage(format!("--inclusion-prob must lie in (0, 1), got {}", settings.priors.inclusion_prob)));
    }
    Ok(())
}

/// One grid axis from a flag, e.g. `0.2,0.4` or `0,pi/2`.
pub fn grid_axis(flag: &str, value: &str) -> CliResult<Vec<f64>> {
    let v = parse_grid_values(value).map_err(|e| usage(format!("--{flag}: {e}")))?;
    if v.is_empty() {
        return Err(usage(format!("--{flag} is empty")));
    }
    Ok(v)
}

pub fn grid_value(flag: &str, value: &str) -> CliResult<f64> {
    match grid_axis(flag, value)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(usage(format!("--{flag} takes a single value"))),
    }
}

/// Size the global pool used by the concurrent fits.
pub fn init_jobs(jobs: Option<usize>) -> CliResult<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("--jobs: {e}")))?;
    }
    Ok(())
}
