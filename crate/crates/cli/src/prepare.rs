use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use mbsts::data::{
    build_weekly_panel, fetch_public_sources, generate_synthetic, parse_indices, parse_jhu_confirmed, parse_oxcgrt,
    parse_population, save_panel_csv, source, HttpTransport, SyntheticConfig, WeeklyInputs, MANIFEST_FILE,
};

use crate::args::PrepareArgs;
use crate::config::{self, set, set_opt, PrepareConfig};
use crate::{usage, CliResult};

pub fn run(a: PrepareArgs) -> CliResult<()> {
    let mut cfg: PrepareConfig = config::load(a.config.as_deref(), "prepare")?;
    set_opt(&mut cfg.out, a.out);
    cfg.synthetic |= a.synthetic;
    set(&mut cfg.units, a.units);
    set(&mut cfg.predictors, a.predictors);
    set(&mut cfg.weeks, a.weeks);
    set(&mut cfg.true_lag, a.true_lag);
    set(&mut cfg.seed, a.seed);
    set_opt(&mut cfg.truth, a.truth);
    set(&mut cfg.sources, a.sources);
    set_opt(&mut cfg.indices, a.indices);
    set_opt(&mut cfg.population, a.population);
    set(&mut cfg.cache_dir, a.cache_dir);
    cfg.refresh |= a.refresh;

    let out = cfg.out.clone().ok_or_else(|| usage("--out is required"))?;
    if cfg.synthetic {
        cfg.truth.get_or_insert_with(|| sibling(&out, "truth.json"));
        synthetic(&cfg, &out)?;
    } else {
        public(&cfg, &out)?;
    }
    config::write_snapshot(&cfg, &sibling(&out, "config.json"))
}

/// `panel.csv` → `panel.<suffix>`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "panel".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn create_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn synthetic(cfg: &PrepareConfig, out: &Path) -> CliResult<()> {
    if cfg.units == 0 || cfg.predictors == 0 {
        return Err(usage("--M and --d must be positive"));
    }
    if cfg.weeks < 2 {
        return Err(usage("--T must be at least 2"));
    }
    let syn = SyntheticConfig::trend_regression(cfg.units, cfg.predictors, cfg.weeks, cfg.true_lag, cfg.seed);
    let (panel, truth) = generate_synthetic(&syn)?;
    create_parent(out)?;
    save_panel_csv(&panel, out)?;
    let truth_path = cfg.truth.as_ref().expect("truth path resolved");
    create_parent(truth_path)?;
    config::write_snapshot(&truth, truth_path)?;
    log::info!("wrote {} and {}", out.display(), truth_path.display());
    Ok(())
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| mbsts::Error::parse(path.display().to_string(), e))?))
}

fn public(cfg: &PrepareConfig, out: &Path) -> CliResult<()> {
    let population = cfg.population.as_ref().ok_or_else(|| usage("--population is required without --synthetic"))?;
    let indices = cfg.indices.as_ref().ok_or_else(|| usage("--indices is required without --synthetic"))?;
    for name in &cfg.sources {
        source(name)?;
    }
    for needed in ["jhu", "oxcgrt"] {
        if !cfg.sources.iter().any(|s| s == needed) {
            return Err(usage(format!("--sources must include {needed}")));
        }
    }
    let fetched = fetch_public_sources(&cfg.cache_dir, &cfg.sources, &HttpTransport, cfg.refresh)?;
    let inputs = WeeklyInputs {
        cases: parse_jhu_confirmed(open(&fetched.files["jhu"])?)?,
        stringency: parse_oxcgrt(open(&fetched.files["oxcgrt"])?)?,
        population: parse_population(open(population)?)?,
        indices: parse_indices(open(indices)?)?,
    };
    let panel = build_weekly_panel(&inputs)?;
    create_parent(out)?;
    save_panel_csv(&panel, out)?;
    fs::copy(cfg.cache_dir.join(MANIFEST_FILE), sibling(out, "manifest.jsonl"))?;
    log::info!("wrote {} ({} units, {} weeks)", out.display(), panel.num_units(), panel.num_weeks());
    Ok(())
}
