use mbsts::data::{generate_synthetic, PanelDataset, SyntheticConfig};
use mbsts::mbsts_tl::{
    bsts_tl_baseline, fit_segment, grid_search, lag_align, mean, normalized_ae, FitSettings, HyperGrid, HyperPoint,
    PartitionPlan, Segment,
};
use mbsts::sampler::McmcConfig;
use mbsts::statespace::{CovarianceSet, SeriesComponents};
use mbsts::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Panel over weeks 1..=t where `y = 100·week + unit` and `x = week + unit/10`,
/// so every aligned row reveals its source week.
fn labelled_panel(units: usize, t: usize) -> PanelDataset {
    let y = DMatrix::from_fn(t, units, |r, m| 100.0 * (r + 1) as f64 + m as f64);
    let x = (0..units).map(|m| DMatrix::from_fn(t, 2, |r, _| (r + 1) as f64 + m as f64 / 10.0)).collect();
    let names: Vec<String> = (0..units).map(|m| format!("U{m}")).collect();
    PanelDataset::new(names, 1, vec!["a".into(), "b".into()], y, x).unwrap()
}

fn regression_only() -> SeriesComponents {
    SeriesComponents { trend: false, seasonal: false, cycle: false, regression: true, seasons: 0 }
}

fn settings(components: SeriesComponents, iterations: usize, seed: u64) -> FitSettings {
    FitSettings {
        components,
        mcmc: McmcConfig::new(iterations, iterations / 4, seed),
        ..FitSettings::default()
    }
}

#[test]
fn lag_one_alignment_of_first_segment() {
    let panel = labelled_panel(2, 53);
    let a = lag_align(Segment::new(9, 22), 1, &panel).unwrap();
    assert_eq!(a.num_pairs(), 12);
    assert_eq!(a.train_weeks(), ((9, 20), (10, 21)));
    let x_weeks: Vec<f64> = a.x_train[0].column(0).iter().copied().collect();
    assert_eq!(x_weeks, (9..=20).map(f64::from).collect::<Vec<_>>());
    let y_weeks: Vec<f64> = a.y_train.column(0).iter().map(|v| v / 100.0).collect();
    assert_eq!(y_weeks, (10..=21).map(f64::from).collect::<Vec<_>>());
    assert_eq!(a.x_predict[1][0], 21.1);
    assert_eq!(a.y_truth, DVector::from_vec(vec![2200.0, 2201.0]));
    assert_eq!(lag_align(Segment::new(9, 22), 2, &panel).unwrap().num_pairs(), 11);
}

#[test]
fn zero_lag_is_the_segment_without_its_endpoint() {
    let panel = labelled_panel(3, 30);
    let seg = Segment::new(5, 17);
    let a = lag_align(seg, 0, &panel).unwrap();
    assert_eq!(a.train_weeks(), ((5, 16), (5, 16)));
    assert_eq!(a.y_train, panel.y.rows(4, 12).into_owned());
    for m in 0..3 {
        assert_eq!(a.x_train[m], panel.x[m].rows(4, 12).into_owned());
        assert_eq!(a.x_predict[m], panel.x[m].row(16).transpose());
    }
}

#[test]
fn infeasible_segments_are_rejected() {
    let panel = labelled_panel(1, 20);
    assert!(matches!(lag_align(Segment::new(5, 8), 2, &panel), Err(Error::SegmentTooShort { lag: 2, .. })));
    assert!(lag_align(Segment::new(5, 9), 2, &panel).is_ok());
    assert!(matches!(lag_align(Segment::new(15, 21), 0, &panel), Err(Error::SegmentOutOfRange { .. })));
    assert!("9:22,20:30".parse::<PartitionPlan>().is_err());
    assert!("9:22,23:37,38:53".parse::<PartitionPlan>().unwrap() == PartitionPlan::weekly_2020());
}

#[test]
fn normalized_ae_matches_a_direct_fold() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let m = rng.random_range(1..8);
        let k = rng.random_range(1..5);
        let truths: Vec<DVector<f64>> =
            (0..k).map(|_| DVector::from_fn(m, |_, _| rng.random_range(-5.0..100.0))).collect();
        let truths: Vec<DVector<f64>> = truths
            .into_iter()
            .map(|mut y| {
                y[0] = y[0].abs() + 0.1;
                y
            })
            .collect();
        let preds: Vec<DVector<f64>> = (0..k).map(|_| DVector::from_fn(m, |_, _| rng.random_range(-50.0..150.0))).collect();
        let got = normalized_ae(&preds, &truths).unwrap();
        for i in 0..k {
            let max = truths[i].iter().cloned().fold(f64::MIN, f64::max);
            let want = (0..m).fold(0.0, |acc, j| acc + (preds[i][j] - truths[i][j]).abs()) / (m as f64 * max);
            assert!((got[i] - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}

#[test]
fn noise_free_lagged_regression_is_predicted_closely() {
    let mut cfg = SyntheticConfig::trend_regression(2, 3, 30, 1, 21);
    cfg.spec.series.iter_mut().for_each(|s| *s = regression_only());
    cfg.covariances = CovarianceSet::isotropic(&cfg.spec, 0.0, 0.0);
    let (panel, _) = generate_synthetic(&cfg).unwrap();
    let point = HyperPoint { rho: 0.5, seasons: 4, damping: 0.5, frequency: 0.0 };
    let fit = fit_segment(&panel, Segment::new(5, 25), 1, &point, &settings(regression_only(), 800, 3)).unwrap();
    assert!(fit.ae < 0.02, "ae {}", fit.ae);
    let misaligned = fit_segment(&panel, Segment::new(5, 25), 0, &point, &settings(regression_only(), 800, 3)).unwrap();
    assert!(misaligned.ae > fit.ae);
}

#[test]
fn constant_panel_with_trend_only() {
    let c = 12.5;
    let y = DMatrix::from_element(20, 2, c);
    let x = vec![DMatrix::zeros(20, 1); 2];
    let panel = PanelDataset::new(vec!["A".into(), "B".into()], 1, vec!["x".into()], y, x).unwrap();
    let trend = SeriesComponents { trend: true, seasonal: false, cycle: false, regression: false, seasons: 0 };
    let point = HyperPoint { rho: 0.4, seasons: 4, damping: 0.5, frequency: 0.0 };
    let fit = fit_segment(&panel, Segment::new(1, 20), 0, &point, &settings(trend, 600, 5)).unwrap();
    for m in 0..2 {
        assert!((fit.prediction.mean[m] - c).abs() < 0.05 * c, "{}", fit.prediction.mean[m]);
    }
}

fn small_panel(seed: u64) -> PanelDataset {
    generate_synthetic(&SyntheticConfig::trend_regression(2, 2, 40, 1, seed)).unwrap().0
}

#[test]
fn singleton_grid_selects_its_point() {
    let panel = small_panel(1);
    let point = HyperPoint { rho: 0.4, seasons: 4, damping: 0.6, frequency: 0.0 };
    let plan: PartitionPlan = "5:20,21:40".parse().unwrap();
    let s = settings(SeriesComponents::all(4), 200, 9);
    let report = grid_search(&panel, &plan, &HyperGrid::singleton(point), &[0, 1], &s).unwrap();
    assert_eq!(report.rows.len(), 4);
    for sel in &report.selections {
        assert_eq!(sel.point, point);
        assert_eq!(sel.fits.len(), 2);
        let recomputed: Vec<f64> = sel.fits.iter().map(|f| f.ae).collect();
        assert_eq!(recomputed, sel.segment_ae);
    }
    assert!(report.rows.iter().all(|r| r.ae.is_finite() && r.ae >= 0.0));
}

#[test]
fn grid_order_does_not_change_the_report() {
    let panel = small_panel(2);
    let plan: PartitionPlan = "5:22,23:40".parse().unwrap();
    let template = SeriesComponents { trend: true, seasonal: true, cycle: false, regression: true, seasons: 0 };
    let s = settings(template, 150, 4);
    let grid = HyperGrid { rho: vec![0.2, 0.8], seasons: vec![3, 4], damping: vec![0.5], frequency: vec![0.0, 1.0] };
    let reversed = HyperGrid {
        rho: vec![0.8, 0.2],
        seasons: vec![4, 3],
        damping: vec![0.5],
        frequency: vec![1.0, 0.0],
    };
    let a = grid_search(&panel, &plan, &grid, &[1], &s).unwrap();
    let b = grid_search(&panel, &plan, &reversed, &[1], &s).unwrap();
    assert_eq!(a, b);
    // The cycle is disabled, so both frequencies share one fit and tie; the
    // lexicographically first wins.
    assert_eq!(a.selections[0].point.frequency, 0.0);
}

#[test]
fn rerun_is_identical_and_baseline_has_the_same_shape() {
    let panel = small_panel(3);
    let plan: PartitionPlan = "5:22,23:40".parse().unwrap();
    let grid = HyperGrid { rho: vec![0.4], seasons: vec![4], damping: vec![0.5], frequency: vec![0.0] };
    let s = settings(SeriesComponents { seasonal: false, ..SeriesComponents::all(4) }, 150, 8);
    let a = bsts_tl_baseline(&panel, &plan, &grid, &[0, 2], &s).unwrap();
    let b = bsts_tl_baseline(&panel, &plan, &grid, &[2, 0], &s).unwrap();
    assert_eq!(a, b);
    let joint = grid_search(&panel, &plan, &grid, &[0, 2], &s).unwrap();
    assert_eq!(joint.rows.len(), a.rows.len());
    assert_eq!(joint.selections.len(), a.selections.len());
    assert!((a.selections[0].mean_ae - mean(&a.selections[0].segment_ae)).abs() < 1e-15);
}

#[test]
fn single_series_baseline_matches_joint_model_in_distribution() {
    let (panel, _) = generate_synthetic(&SyntheticConfig::trend_regression(1, 2, 40, 0, 17)).unwrap();
    let plan: PartitionPlan = "10:40".parse().unwrap();
    let grid = HyperGrid { rho: vec![0.4], seasons: vec![4], damping: vec![0.5], frequency: vec![0.0] };
    let template = SeriesComponents { seasonal: false, cycle: false, ..SeriesComponents::all(4) };
    let mut joint = Vec::new();
    let mut single = Vec::new();
    for seed in 0..6 {
        let s = settings(template, 300, seed);
        joint.push(grid_search(&panel, &plan, &grid, &[0], &s).unwrap().selections[0].mean_ae);
        single.push(bsts_tl_baseline(&panel, &plan, &grid, &[0], &s).unwrap().selections[0].mean_ae);
    }
    let range = |v: &[f64]| (v.iter().cloned().fold(f64::MAX, f64::min), v.iter().cloned().fold(f64::MIN, f64::max));
    let (a, b) = (range(&joint), range(&single));
    assert!(a.0 <= b.1 && b.0 <= a.1, "replicate ranges {a:?} and {b:?} do not overlap");
}
