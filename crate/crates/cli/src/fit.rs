use std::fs;
use std::path::Path;

use mbsts::data::load_panel_csv;
use mbsts::mbsts_tl::{
    dominant_predictors, fit_segment_with_draws, fit_with, job_seed, mean, write_dominant_csv, FitSettings,
    HyperPoint, ModelKind, PartitionPlan, SegmentFit,
};
use mbsts::sampler::{write_draws_csv, PosteriorDraws};
use rayon::prelude::*;

use crate::args::FitArgs;
use crate::config::{self, grid_value, set_opt, FitConfig, TuneConfig, SNAPSHOT_FILE};
use crate::tune::{resolve_plan, write_csv, write_fits};
use crate::{usage, CliResult};

pub fn run(a: FitArgs) -> CliResult<()> {
    let mut cfg: FitConfig = config::load(a.config.as_deref(), "fit")?;
    set_opt(&mut cfg.panel, a.panel);
    set_opt(&mut cfg.out_dir, a.out_dir);
    set_opt(&mut cfg.segments, a.segments);
    set_opt(&mut cfg.lag, a.lag);
    set_opt(&mut cfg.rho, a.rho);
    set_opt(&mut cfg.seasons, a.seasons);
    if let Some(v) = &a.varrho {
        cfg.varrho = Some(grid_value("varrho", v)?);
    }
    if let Some(v) = &a.lambda {
        cfg.lambda = Some(grid_value("lambda", v)?);
    }
    set_opt(&mut cfg.from_tune, a.from_tune);
    cfg.dominant |= a.dominant;
    cfg.dump_draws |= a.dump_draws;
    cfg.baseline |= a.baseline;
    config::apply_model_args(&mut cfg.model, &mut cfg.jobs, &a.model)?;
    if let Some(dir) = cfg.from_tune.take() {
        fill_from_tune(&mut cfg, &dir)?;
    }

    let lag = cfg.lag.ok_or_else(|| usage("--lag is required (or --from-tune)"))?;
    let point = HyperPoint {
        rho: cfg.rho.ok_or_else(|| usage("--rho is required (or --from-tune)"))?,
        seasons: cfg.seasons.ok_or_else(|| usage("--S is required (or --from-tune)"))?,
        damping: cfg.varrho.ok_or_else(|| usage("--varrho is required (or --from-tune)"))?,
        frequency: cfg.lambda.ok_or_else(|| usage("--lambda is required (or --from-tune)"))?,
    };
    let panel_path = cfg.panel.clone().ok_or_else(|| usage("--panel is required"))?;
    let out_dir = cfg.out_dir.clone().ok_or_else(|| usage("--out-dir is required"))?;
    let panel = load_panel_csv(&panel_path)?;
    let plan = resolve_plan(&mut cfg.segments, &panel)?;
    plan.check_feasible(&panel, &[lag])?;
    cfg.model.mcmc.validate()?;
    config::init_jobs(cfg.jobs)?;

    let settings = cfg.model;
    let seeded = |k: usize| FitSettings {
        mcmc: mbsts::sampler::McmcConfig { seed: job_seed(&settings, lag, plan.segments[k], &point), ..settings.mcmc },
        ..settings
    };
    let joint: Vec<(SegmentFit, PosteriorDraws)> = (0..plan.len())
        .into_par_iter()
        .map(|k| fit_segment_with_draws(&panel, plan.segments[k], lag, &point, &seeded(k)))
        .collect::<mbsts::Result<_>>()?;
    let (fits, draws): (Vec<SegmentFit>, Vec<PosteriorDraws>) = joint.into_iter().unzip();

    fs::create_dir_all(&out_dir)?;
    write_fits(&fits, &plan, &panel.units, &panel.predictor_names, &out_dir, "")?;
    if cfg.dominant {
        let rows = dominant_predictors(&fits, &plan, &panel.units, &panel.predictor_names)?;
        write_csv(out_dir.join("dominant.csv"), |w| write_dominant_csv(&rows, w))?;
    }
    if cfg.dump_draws {
        for (k, d) in draws.iter().enumerate() {
            write_csv(out_dir.join(format!("draws_segment{}.csv", k + 1)), |w| write_draws_csv(d, w))?;
        }
    }
    print_aes("MBSTS-TL", &fits, &plan);
    if cfg.baseline {
        let base: Vec<SegmentFit> = (0..plan.len())
            .into_par_iter()
            .map(|k| fit_with(ModelKind::Bsts, &panel, plan.segments[k], lag, &point, &seeded(k)))
            .collect::<mbsts::Result<_>>()?;
        write_fits(&base, &plan, &panel.units, &panel.predictor_names, &out_dir, "baseline_")?;
        print_aes("BSTS-TL", &base, &plan);
    }
    config::write_snapshot(&cfg, &out_dir.join(SNAPSHOT_FILE))
}

fn print_aes(title: &str, fits: &[SegmentFit], plan: &PartitionPlan) {
    let aes: Vec<f64> = fits.iter().map(|f| f.ae).collect();
    let lag = fits.first().map_or(0, |f| f.lag);
    let per: Vec<String> = plan.segments.iter().zip(&aes).map(|(s, ae)| format!("{s} {ae:.4}")).collect();
    println!("{title} lag {lag}: {} | average AE {:.4}", per.join(", "), mean(&aes));
}

/// Take unset hyper-parameters from `selection.csv` of a tune directory (the
/// row of `lag` when set, else the smallest mean AE), and unset panel and
/// segments from its config snapshot.
fn fill_from_tune(cfg: &mut FitConfig, dir: &Path) -> CliResult<()> {
    let path = dir.join("selection.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(mbsts::Error::from)?;
    let mut best: Option<(usize, HyperPoint, f64)> = None;
    for rec in reader.records() {
        let rec = rec.map_err(mbsts::Error::from)?;
        let field = |i: usize| -> CliResult<&str> {
            rec.get(i).ok_or_else(|| mbsts::Error::parse(path.display().to_string(), "short row").into())
        };
        let num = |i: usize| -> CliResult<f64> {
            field(i)?.parse::<f64>().map_err(|e| mbsts::Error::parse(path.display().to_string(), e).into())
        };
        let lag = num(0)? as usize;
        let point = HyperPoint { rho: num(1)?, seasons: num(2)? as usize, damping: num(3)?, frequency: num(4)? };
        let ae = num(5)?;
        let wanted = match cfg.lag {
            Some(l) => l == lag,
            None => best.as_ref().is_none_or(|b| ae < b.2),
        };
        if wanted && (cfg.lag.is_none() || best.is_none()) {
            best = Some((lag, point, ae));
        }
    }
    let (lag, point, _) = best.ok_or_else(|| match cfg.lag {
        Some(l) => usage(format!("{} has no row for lag {l}", path.display())),
        None => usage(format!("{} has no rows", path.display())),
    })?;
    cfg.lag = Some(lag);
    cfg.rho.get_or_insert(point.rho);
    cfg.seasons.get_or_insert(point.seasons);
    cfg.varrho.get_or_insert(point.damping);
    cfg.lambda.get_or_insert(point.frequency);

    let snapshot = dir.join(SNAPSHOT_FILE);
    if snapshot.exists() {
        let tune: TuneConfig = config::load(Some(&snapshot), "tune")?;
        if cfg.panel.is_none() {
            cfg.panel = tune.panel;
        }
        if cfg.segments.is_none() {
            cfg.segments = tune.segments;
        }
    }
    Ok(())
}
