use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mbsts::data::{load_panel_csv, sha256_hex, ProvenanceRecord, MANIFEST_FILE, SOURCES};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn mbsts(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbsts")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = mbsts(dir, args);
    assert!(out.status.success(), "mbsts {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the single stderr line of a failing run.
fn fails(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = mbsts(dir, args);
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "stderr: {err}");
    (out.status.code().unwrap(), err.trim().to_string())
}

fn csv_rows(path: &Path) -> Vec<BTreeRow> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

type BTreeRow = std::collections::BTreeMap<String, String>;

const FAST: [&str; 4] = ["--iterations", "200", "--burn-in", "50"];

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["tune", "--help"]] {
        let out = mbsts(dir.path(), args);
        assert_eq!(out.status.code(), Some(0));
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, line) = fails(dir.path(), &["prepare", "--sources", "jhu,oxcgrt", "--indices", "i.csv", "--out", "p.csv"]);
    assert_eq!(code, 1);
    assert!(line.starts_with("error: usage:") && line.contains("--population"), "{line}");
    for args in [&["tune", "--nope"][..], &["frobnicate"], &["tune", "--panel", "p.csv", "--lags", "x"]] {
        let (code, line) = fails(dir.path(), args);
        assert_eq!(code, 1, "{args:?}");
        assert!(line.starts_with("error: usage:"), "{line}");
    }
}

#[test]
fn synthetic_prepare_writes_panel_truth_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["prepare", "--synthetic", "--M", "3", "--d", "7", "--T", "60", "--true-lag", "1", "--seed", "7", "--out", "out/panel.csv"]);
    let panel = load_panel_csv(dir.path().join("out/panel.csv")).unwrap();
    assert_eq!((panel.num_units(), panel.num_predictors(), panel.num_weeks()), (3, 7, 60));
    let truth: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/panel.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["true_lag"], 1);
    assert_eq!(truth["beta"].as_array().unwrap().len(), 3);

    // the snapshot alone reproduces the run
    let snapshot = dir.path().join("out/panel.config.json");
    let again = dir.path().join("again");
    fs::create_dir_all(again.join("out")).unwrap();
    fs::copy(&snapshot, again.join("cfg.json")).unwrap();
    ok(&again, &["prepare", "--config", "cfg.json"]);
    for f in ["panel.csv", "panel.truth.json", "panel.config.json"] {
        assert_eq!(fs::read(dir.path().join("out").join(f)).unwrap(), fs::read(again.join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.toml"), "command = \"prepare\"\nsynthetic = true\nM = 2\nd = 3\nT = 30\nseed = 4\nout = \"a.csv\"\n").unwrap();
    ok(dir.path(), &["prepare", "--config", "p.toml", "--M", "4", "--out", "b.csv"]);
    let panel = load_panel_csv(dir.path().join("b.csv")).unwrap();
    assert_eq!((panel.num_units(), panel.num_predictors(), panel.num_weeks()), (4, 3, 30));
    assert!(!dir.path().join("a.csv").exists());

    fs::write(dir.path().join("bad.toml"), "command = \"prepare\"\nsynthetic = true\nunits = 2\n").unwrap();
    let (code, line) = fails(dir.path(), &["prepare", "--config", "bad.toml", "--out", "c.csv"]);
    assert_eq!(code, 1);
    assert!(line.contains("unknown field"), "{line}");
    let (code, line) = fails(dir.path(), &["tune", "--config", "p.toml"]);
    assert_eq!(code, 1);
    assert!(line.contains("not 'tune'"), "{line}");
}

/// Pre-seeded source cache; the run never touches the network.
#[test]
fn public_prepare_from_cache_builds_the_weekly_panel() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    fs::create_dir_all(&cache).unwrap();
    // 2020-02-24 is the Monday of ISO week 9; 42 days run to the end of week 14
    let mut days = Vec::new();
    days.extend((24..=29).map(|d| (2, d)));
    days.extend((1..=31).map(|d| (3, d)));
    days.extend((1..=5).map(|d| (4, d)));
    assert_eq!(days.len(), 42);
    let cum_ny = |i: usize| 10.0 * (i * i) as f64;
    let cum_ca = |i: usize| 3.0 * i as f64;

    let mut jhu = String::from("UID,iso2,Admin2,Province_State,Country_Region");
    for (m, d) in &days {
        write!(jhu, ",{m}/{d}/20").unwrap();
    }
    jhu.push('\n');
    // New York split over two counties
    for (uid, state, f) in [(1, "New York", 0.25), (2, "New York", 0.75), (3, "California", 1.0)] {
        write!(jhu, "{uid},US,C{uid},{state},US").unwrap();
        for i in 0..days.len() {
            let v = if state == "New York" { cum_ny(i) * f } else { cum_ca(i) };
            write!(jhu, ",{v}").unwrap();
        }
        jhu.push('\n');
    }
    let mut ox = String::from("CountryName,RegionName,RegionCode,Jurisdiction,Date,StringencyIndex\n");
    for (i, (m, d)) in days.iter().enumerate() {
        writeln!(ox, "United States,New York,US_NY,STATE_TOTAL,2020{m:02}{d:02},{}", i).unwrap();
        writeln!(ox, "United States,California,US_CA,STATE_TOTAL,2020{m:02}{d:02},{}", 2 * i).unwrap();
    }
    let mut manifest = String::new();
    for (src, body) in SOURCES.iter().zip([&jhu, &ox]) {
        fs::write(cache.join(src.file), body).unwrap();
        let rec = ProvenanceRecord {
            source: src.name.into(),
            url: src.url.into(),
            file: src.file.into(),
            timestamp: "2020-12-31T00:00:00Z".into(),
            sha256: sha256_hex(body.as_bytes()),
            bytes: body.len() as u64,
        };
        manifest.push_str(&serde_json::to_string(&rec).unwrap());
        manifest.push('\n');
    }
    fs::write(cache.join(MANIFEST_FILE), &manifest).unwrap();
    fs::write(dir.path().join("pop.csv"), "unit,population\nNew York,200000\nCA,100000\n").unwrap();
    let mut idx = String::from("unit,week,driving,nsad\n");
    for w in 10..=14 {
        writeln!(idx, "NY,{w},{},0.5\nCA,{w},{},0.25", 100 - w, 50 + w).unwrap();
    }
    fs::write(dir.path().join("indices.csv"), idx).unwrap();

    ok(dir.path(), &[
        "prepare", "--sources", "jhu,oxcgrt", "--indices", "indices.csv", "--population", "pop.csv",
        "--cache-dir", "cache", "--out", "panel.csv",
    ]);
    let panel = load_panel_csv(dir.path().join("panel.csv")).unwrap();
    assert_eq!(panel.units, vec!["CA", "NY"]);
    assert_eq!(panel.predictor_names, vec!["si", "driving", "nsad"]);
    assert_eq!((panel.first_week, panel.num_weeks()), (10, 5));
    let sunday = |w: usize| (w - 9) * 7 + 6;
    for w in 10..=14usize {
        let row = w - 10;
        let ny = (cum_ny(sunday(w)) - cum_ny(sunday(w - 1))) / 200_000.0 * 1e5;
        let ca = (cum_ca(sunday(w)) - cum_ca(sunday(w - 1))) / 100_000.0 * 1e5;
        assert!((panel.y[(row, 1)] - ny).abs() < 1e-9 * ny.max(1.0), "NY week {w}");
        assert!((panel.y[(row, 0)] - ca).abs() < 1e-9, "CA week {w}");
        let si_ny = ((w - 9) * 7 + 3) as f64;
        assert!((panel.x[1][(row, 0)] - si_ny).abs() < 1e-12);
        assert!((panel.x[0][(row, 0)] - 2.0 * si_ny).abs() < 1e-12);
        assert_eq!(panel.x[1][(row, 1)], (100 - w) as f64);
    }
    assert_eq!(fs::read_to_string(dir.path().join("panel.manifest.jsonl")).unwrap(), manifest);

    fs::write(dir.path().join("pop2.csv"), "unit,population\nNew York,200000\n").unwrap();
    let (code, line) = fails(dir.path(), &[
        "prepare", "--indices", "indices.csv", "--population", "pop2.csv", "--cache-dir", "cache", "--out", "p2.csv",
    ]);
    assert_eq!(code, 2);
    assert!(line.starts_with("error: join:") && line.contains("CA"), "{line}");
    let (code, line) = fails(dir.path(), &[
        "prepare", "--sources", "jhu,nyt", "--indices", "indices.csv", "--population", "pop.csv", "--out", "p3.csv",
    ]);
    assert_eq!(code, 2);
    assert!(line.contains("jhu, oxcgrt"), "{line}");
}

fn synthetic_panel(dir: &Path) {
    ok(dir, &["prepare", "--synthetic", "--M", "3", "--d", "7", "--T", "60", "--true-lag", "1", "--seed", "7", "--out", "panel.csv"]);
}

#[test]
fn tune_writes_tables_and_ranks_the_true_lag_first() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_panel(dir.path());
    let mut args = vec![
        "tune", "--panel", "panel.csv", "--segments", "9:22,23:37,38:53", "--lags", "0,1,2", "--seed", "1",
        "--grid-rho", "0.4,0.8", "--grid-S", "4", "--grid-varrho", "0.5", "--grid-lambda", "0",
        "--components", "trend,regression", "--out-dir", "tune",
    ];
    args.extend(FAST);
    let stdout = ok(dir.path(), &args);
    assert!(stdout.contains("best lag: 1"), "{stdout}");

    let ae = csv_rows(&dir.path().join("tune/ae.csv"));
    assert_eq!(ae.len(), 2 * 3 * 3);
    for rho in ["0.4", "0.8"] {
        let mut cells: Vec<(String, String)> =
            ae.iter().filter(|r| r["rho"] == rho).map(|r| (r["lag"].clone(), r["segment"].clone())).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 9, "rho {rho}");
    }
    let sel = csv_rows(&dir.path().join("tune/selection.csv"));
    assert_eq!(sel.len(), 3);
    assert!(sel.iter().all(|r| r["S"] == "4"));
    // selection is the point with the smallest mean AE over segments
    for s in &sel {
        let mean_of = |rho: &str| {
            let v: Vec<f64> =
                ae.iter().filter(|r| r["rho"] == rho && r["lag"] == s["lag"]).map(|r| r["ae"].parse::<f64>().unwrap()).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (a, b) = (mean_of("0.4"), mean_of("0.8"));
        let want = if a <= b { "0.4" } else { "0.8" };
        assert_eq!(s["rho"], want);
        assert!((s["mean_ae"].parse::<f64>().unwrap() - a.min(b)).abs() < 1e-12);
    }
    let preds = csv_rows(&dir.path().join("tune/predictions.csv"));
    assert_eq!(preds.len(), 3 * 3 * 3);
    let coefs = csv_rows(&dir.path().join("tune/coefficients.csv"));
    assert_eq!(coefs.len(), 3 * 3 * 3 * 7);
    assert!(dir.path().join("tune/config.json").exists());
    assert!(!dir.path().join("tune/baseline_ae.csv").exists());
}

#[test]
fn tune_rejects_infeasible_partitions_and_bad_grids() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_panel(dir.path());
    let (code, line) = fails(dir.path(), &["tune", "--panel", "panel.csv", "--segments", "9:11", "--lags", "1", "--out-dir", "t"]);
    assert_eq!(code, 2);
    assert!(line.starts_with("error: segment_too_short:"), "{line}");
    let (code, line) = fails(dir.path(), &["tune", "--panel", "panel.csv", "--segments", "50:70", "--out-dir", "t"]);
    assert_eq!(code, 2);
    assert!(line.starts_with("error: segment_out_of_range:"), "{line}");
    let (code, _) = fails(dir.path(), &["tune", "--panel", "panel.csv", "--segments", "9:22", "--grid-rho", "1.5", "--out-dir", "t"]);
    assert_eq!(code, 1);
    let (code, _) = fails(dir.path(), &["tune", "--panel", "panel.csv", "--segments", "9:22", "--grid-S", "2.5", "--out-dir", "t"]);
    assert_eq!(code, 1);
}

/// Panel whose target is exactly `x(t − 1) · β` per unit.
fn noise_free_panel(path: &Path, predictors: usize) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (units, weeks) = (3, 40);
    let x: Vec<DMatrix<f64>> = (0..units)
        .map(|_| DMatrix::from_fn(weeks, predictors, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let mut text = String::from("unit,week,case_rate");
    for j in 0..predictors {
        write!(text, ",x{}", j + 1).unwrap();
    }
    text.push('\n');
    for (m, xm) in x.iter().enumerate() {
        let beta: Vec<f64> = (0..predictors).map(|j| if j == 0 { 4.0 + m as f64 } else { 0.0 }).collect();
        for t in 0..weeks {
            let y = if t == 0 { 50.0 } else { 50.0 + (0..predictors).map(|j| xm[(t - 1, j)] * beta[j]).sum::<f64>() };
            write!(text, "U{},{},{y}", m + 1, t + 1).unwrap();
            for j in 0..predictors {
                write!(text, ",{}", xm[(t, j)]).unwrap();
            }
            text.push('\n');
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_on_noise_free_regression_predicts_closely() {
    let dir = tempfile::tempdir().unwrap();
    noise_free_panel(&dir.path().join("panel.csv"), 3);
    let mut args = vec![
        "fit", "--panel", "panel.csv", "--segments", "2:20,21:40", "--lag", "1", "--rho", "0.5", "--S", "4",
        "--varrho", "0.5", "--lambda", "0", "--components", "regression", "--seed", "2", "--out-dir", "fit",
    ];
    args.extend(FAST);
    ok(dir.path(), &args);
    let preds = csv_rows(&dir.path().join("fit/predictions.csv"));
    assert_eq!(preds.len(), 2 * 3);
    for p in &preds {
        assert!(p["ae"].parse::<f64>().unwrap() < 0.02, "{p:?}");
    }
    let coefs = csv_rows(&dir.path().join("fit/coefficients.csv"));
    for c in coefs.iter().filter(|c| c["predictor"] == "x1") {
        assert!(c["inclusion_prob"].parse::<f64>().unwrap() > 0.9, "{c:?}");
    }
}

#[test]
fn dominant_on_a_single_predictor_panel_is_that_predictor() {
    let dir = tempfile::tempdir().unwrap();
    noise_free_panel(&dir.path().join("panel.csv"), 1);
    let mut args = vec![
        "fit", "--panel", "panel.csv", "--segments", "2:20,21:40", "--lag", "0", "--rho", "0.5", "--S", "4",
        "--varrho", "0.5", "--lambda", "0", "--components", "trend,regression", "--dominant", "--out-dir", "fit",
    ];
    args.extend(FAST);
    ok(dir.path(), &args);
    let rows = csv_rows(&dir.path().join("fit/dominant.csv"));
    assert_eq!(rows.len(), 2 * 3);
    assert!(rows.iter().all(|r| r["predictor"] == "x1"));
}

#[test]
fn fit_from_tune_reproduces_the_tuned_predictions() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_panel(dir.path());
    let mut tune = vec![
        "tune", "--panel", "panel.csv", "--segments", "9:22,23:37,38:53", "--lags", "0,1", "--seed", "5",
        "--grid-rho", "0.6", "--grid-S", "3,4", "--grid-varrho", "0.5", "--grid-lambda", "0", "--out-dir", "tune",
        "--components", "trend,seasonal,regression",
    ];
    tune.extend(FAST);
    ok(dir.path(), &tune);
    let mut fit = vec![
        "fit", "--from-tune", "tune", "--lag", "0", "--seed", "5", "--components", "trend,seasonal,regression",
        "--dump-draws", "--baseline", "--out-dir", "fit",
    ];
    fit.extend(FAST);
    let stdout = ok(dir.path(), &fit);
    assert!(stdout.contains("MBSTS-TL lag 0") && stdout.contains("BSTS-TL lag 0"), "{stdout}");
    let tuned: Vec<BTreeRow> = csv_rows(&dir.path().join("tune/predictions.csv")).into_iter().filter(|r| r["lag"] == "0").collect();
    assert_eq!(tuned, csv_rows(&dir.path().join("fit/predictions.csv")));
    for k in 1..=3 {
        let draws = fs::read_to_string(dir.path().join(format!("fit/draws_segment{k}.csv"))).unwrap();
        assert_eq!(draws.lines().count(), 1 + 150);
    }
    assert!(dir.path().join("fit/baseline_predictions.csv").exists());
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit/config.json")).unwrap()).unwrap();
    assert_eq!(cfg["from_tune"], serde_json::Value::Null);
    assert_eq!(cfg["lag"], 0);
    assert_eq!(cfg["segments"], "9:22,23:37,38:53");

    let (code, line) = fails(dir.path(), &["fit", "--from-tune", "tune", "--lag", "2", "--out-dir", "f2"]);
    assert_eq!(code, 1);
    assert!(line.contains("no row for lag 2"), "{line}");
    let (code, line) = fails(dir.path(), &["fit", "--panel", "panel.csv", "--lag", "1", "--out-dir", "f3"]);
    assert_eq!(code, 1);
    assert!(line.contains("--rho"), "{line}");
}
