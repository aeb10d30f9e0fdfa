use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mbsts::data::{load_panel_csv, PanelDataset};
use mbsts::mbsts_tl::{
    bsts_tl_baseline, grid_search, summary_table, write_ae_csv, write_coefficients_csv, write_predictions_csv,
    write_selection_csv, PartitionPlan, SegmentFit, TuneReport,
};

use crate::args::TuneArgs;
use crate::config::{self, grid_axis, set, set_opt, TuneConfig, SNAPSHOT_FILE};
use crate::{usage, CliResult};

pub fn run(a: TuneArgs) -> CliResult<()> {
    let mut cfg: TuneConfig = config::load(a.config.as_deref(), "tune")?;
    set_opt(&mut cfg.panel, a.panel);
    set_opt(&mut cfg.out_dir, a.out_dir);
    set_opt(&mut cfg.segments, a.segments);
    set(&mut cfg.lags, a.lags);
    if let Some(v) = &a.grid_rho {
        cfg.grid.rho = grid_axis("grid-rho", v)?;
    }
    if let Some(v) = &a.grid_seasons {
        cfg.grid.seasons = grid_axis("grid-S", v)?
            .into_iter()
            .map(|s| if s.fract() == 0.0 && s >= 1.0 { Ok(s as usize) } else { Err(usage(format!("--grid-S: bad season count {s}"))) })
            .collect::<CliResult<_>>()?;
    }
    if let Some(v) = &a.grid_varrho {
        cfg.grid.damping = grid_axis("grid-varrho", v)?;
    }
    if let Some(v) = &a.grid_lambda {
        cfg.grid.frequency = grid_axis("grid-lambda", v)?;
    }
    cfg.baseline |= a.baseline;
    config::apply_model_args(&mut cfg.model, &mut cfg.jobs, &a.model)?;
    cfg.grid.validate().map_err(|e| usage(e.to_string()))?;
    if cfg.lags.is_empty() {
        return Err(usage("--lags is empty"));
    }

    let panel_path = cfg.panel.clone().ok_or_else(|| usage("--panel is required"))?;
    let out_dir = cfg.out_dir.clone().ok_or_else(|| usage("--out-dir is required"))?;
    let panel = load_panel_csv(&panel_path)?;
    let plan = resolve_plan(&mut cfg.segments, &panel)?;
    config::init_jobs(cfg.jobs)?;

    let report = grid_search(&panel, &plan, &cfg.grid, &cfg.lags, &cfg.model)?;
    fs::create_dir_all(&out_dir)?;
    write_report(&report, &out_dir, "")?;
    print!("{}", summary_table(&report));
    if cfg.baseline {
        let base = bsts_tl_baseline(&panel, &plan, &cfg.grid, &cfg.lags, &cfg.model)?;
        write_report(&base, &out_dir, "baseline_")?;
        println!();
        print!("{}", summary_table(&base));
    }
    config::write_snapshot(&cfg, &out_dir.join(SNAPSHOT_FILE))
}

/// Parse `segments`, or fill it with the default partition of `panel`.
pub fn resolve_plan(segments: &mut Option<String>, panel: &PanelDataset) -> CliResult<PartitionPlan> {
    let plan = match segments {
        Some(s) => s.parse::<PartitionPlan>().map_err(|e| usage(format!("--segments: {e}")))?,
        None => PartitionPlan::default_for(panel).map_err(|e| usage(format!("--segments: {e}")))?,
    };
    *segments = Some(plan.segments.iter().map(|s| format!("{}:{}", s.start, s.end)).collect::<Vec<_>>().join(","));
    Ok(plan)
}

pub fn write_csv(path: PathBuf, f: impl FnOnce(&mut BufWriter<File>) -> mbsts::Result<()>) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(&path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Coefficient and prediction CSVs of `fits`, file names prefixed by `prefix`.
pub fn write_fits(fits: &[SegmentFit], plan: &PartitionPlan, panel_units: &[String], predictors: &[String], dir: &Path, prefix: &str) -> CliResult<()> {
    write_csv(dir.join(format!("{prefix}coefficients.csv")), |w| write_coefficients_csv(fits, plan, panel_units, predictors, w))?;
    write_csv(dir.join(format!("{prefix}predictions.csv")), |w| write_predictions_csv(fits, plan, panel_units, w))
}

fn write_report(report: &TuneReport, dir: &Path, prefix: &str) -> CliResult<()> {
    write_csv(dir.join(format!("{prefix}ae.csv")), |w| write_ae_csv(report, w))?;
    write_csv(dir.join(format!("{prefix}selection.csv")), |w| write_selection_csv(report, w))?;
    let fits: Vec<SegmentFit> = report.selections.iter().flat_map(|s| s.fits.iter().cloned()).collect();
    write_fits(&fits, &report.plan, &report.units, &report.predictor_names, dir, prefix)
}
