mod common;

use moc_core::env::Phase;
use moc_core::learning::EpisodeMetrics;
use moc_harness::aggregate::{aggregate_seeds, bootstrap_interval, cmd_aggregate, quantile, SeedCurve};
use moc_harness::config::set_path;
use moc_harness::output::SeedId;
use moc_harness::run::cmd_run;
use moc_harness::HarnessError;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

fn row(episode: usize, steps: usize, ret: f64) -> EpisodeMetrics {
    EpisodeMetrics {
        episode,
        steps,
        ret,
        phase: Phase::Source,
        option_durations: vec![Some(2.0); 4],
        info_radius: None,
    }
}

fn seed(index: usize, rows: Vec<EpisodeMetrics>) -> SeedCurve {
    SeedCurve { id: SeedId { master_seed: 0, index }, episodes: rows }
}

#[test]
fn quantile_interpolates_linearly() {
    let v = [1.0, 2.0, 4.0, 8.0];
    assert_eq!(quantile(&v, 0.0), 1.0);
    assert_eq!(quantile(&v, 1.0), 8.0);
    // h = 3 * 0.5 = 1.5 -> halfway between 2 and 4
    assert_eq!(quantile(&v, 0.5), 3.0);
    assert!((quantile(&v, 0.1) - 1.3).abs() < 1e-15);
    assert!((quantile(&v, 0.9) - 6.8).abs() < 1e-15);
}

#[test]
fn constant_curves_give_a_degenerate_interval() {
    let config = common::parse(&common::four_rooms(std::path::Path::new("unused"), 5, 3));
    let seeds: Vec<_> = (0..5).map(|i| seed(i, (0..3).map(|e| row(e, 42, 1.0)).collect())).collect();
    let curve = aggregate_seeds(&config, &seeds, 1).unwrap();
    assert_eq!(curve.x, vec![0.0, 1.0, 2.0]);
    for point in &curve.points {
        let steps = point[0].unwrap();
        assert_eq!((steps.mean, steps.lo, steps.hi), (42.0, 42.0, 42.0));
        assert!(point[curve.metrics.len() - 1].is_none());
    }
}

#[test]
fn too_few_seeds_is_an_error() {
    let config = common::parse(&common::four_rooms(std::path::Path::new("unused"), 1, 3));
    let seeds = vec![seed(0, vec![row(0, 1, 0.0)])];
    assert!(matches!(aggregate_seeds(&config, &seeds, 1), Err(HarnessError::Aggregate(_))));
}

/// Synthetic Gaussian seeds: the 80% interval should contain the true mean
/// about 80% of the time.
#[test]
fn bootstrap_covers_the_true_mean_about_eighty_percent_of_the_time() {
    let normal = Normal::new(3.0, 2.0).unwrap();
    let mut data_rng = ChaCha8Rng::seed_from_u64(1);
    let mut boot_rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 500;
    let covered = (0..trials)
        .filter(|_| {
            let values: Vec<f64> = (0..50).map(|_| normal.sample(&mut data_rng)).collect();
            let i = bootstrap_interval(&values, 1000, &mut boot_rng);
            i.lo <= 3.0 && 3.0 <= i.hi
        })
        .count();
    let rate = covered as f64 / trials as f64;
    assert!((0.74..=0.86).contains(&rate), "coverage {rate}");
}

#[test]
fn intervals_narrow_with_more_seeds() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = (0..50).map(|_| normal.sample(&mut rng)).collect();
    let wide = bootstrap_interval(&data[..10], 1000, &mut rng);
    let narrow = bootstrap_interval(&data, 1000, &mut rng);
    assert!(narrow.hi - narrow.lo < wide.hi - wide.lo);
}

#[test]
fn interval_width_shrinks_from_ten_to_fifty_four_rooms_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc = common::four_rooms(tmp.path(), 50, 10);
    set_path(&mut doc, "harness.info_radius_every", json!(null)).unwrap();
    let config = common::parse(&doc);
    let runs = cmd_run(&config, false).unwrap();
    let seeds: Vec<SeedCurve> = runs
        .iter()
        .map(|r| seed(r.seed_index, r.metrics.episodes.clone()))
        .collect();
    let width = |n: usize| {
        let curve = aggregate_seeds(&config, &seeds[..n], 1).unwrap();
        curve.points.iter().map(|p| p[0].unwrap().hi - p[0].unwrap().lo).sum::<f64>()
    };
    assert!(width(50) < width(10), "{} vs {}", width(50), width(10));
}

#[test]
fn timestep_runs_are_binned_with_carry_forward() {
    let doc = json!({
        "env": {"name": "mountain_car_sparse"},
        "features": {"kind": "rbf"},
        "harness": {"timesteps": 100, "bin_width": 25}
    });
    let config = common::parse(&doc);
    let n = config.effective_options();
    let with_options = |mut r: EpisodeMetrics| {
        r.option_durations = vec![None; n];
        r
    };
    // episodes end at steps 10, 20 and 90 for seed 0, at 60 and 100 for seed 1
    let a = seed(0, vec![row(0, 10, 1.0), row(1, 10, 3.0), row(2, 70, 5.0)].into_iter().map(with_options).collect());
    let b = seed(1, vec![row(0, 60, 2.0), row(1, 40, 4.0)].into_iter().map(with_options).collect());
    let curve = aggregate_seeds(&config, &[a, b], 25).unwrap();
    assert_eq!(curve.x, vec![25.0, 50.0, 75.0, 100.0]);
    let ret: Vec<Option<f64>> = curve.points.iter().map(|p| p[1].map(|i| i.mean)).collect();
    // seed 0: 2, 2, 2, 5; seed 1: -, -, 2, 4
    assert_eq!(ret, vec![Some(2.0), Some(2.0), Some(2.0), Some(4.5)]);
    assert_eq!(curve.points[0][1].unwrap().lo, 2.0);
}

#[test]
fn aggregating_directories_checks_their_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = common::four_rooms(&tmp.path().join("a"), 2, 6);
    let mut b = common::four_rooms(&tmp.path().join("b"), 3, 6);
    set_path(&mut b, "harness.master_seed", json!(12)).unwrap();
    cmd_run(&common::parse(&a), false).unwrap();
    cmd_run(&common::parse(&b), false).unwrap();
    let out = tmp.path().join("pooled/curve.csv");
    let curve = cmd_aggregate(&[tmp.path().join("a"), tmp.path().join("b")], &out, None).unwrap();
    assert_eq!(curve.seeds.len(), 5);
    assert!(out.exists());
    assert!(tmp.path().join("pooled/curve.csv.manifest.json").exists());
    let header = std::fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("x,steps_mean,steps_lo80,steps_hi80,return_mean"));

    set_path(&mut a, "learner.lr", json!(0.5)).unwrap();
    set_path(&mut a, "harness.output_dir", json!(tmp.path().join("c"))).unwrap();
    cmd_run(&common::parse(&a), false).unwrap();
    let err = cmd_aggregate(&[tmp.path().join("b"), tmp.path().join("c")], &out, None).unwrap_err();
    assert!(matches!(err, HarnessError::Aggregate(ref m) if m.contains("config differs")), "{err}");
}

proptest! {
    #[test]
    fn bounds_bracket_the_mean(values in prop::collection::vec(-1e6f64..1e6, 1..40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let i = bootstrap_interval(&values, 200, &mut rng);
        prop_assert!(i.lo <= i.mean && i.mean <= i.hi);
        let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!(i.lo >= min - 1e-6 && i.hi <= max + 1e-6);
    }
}
