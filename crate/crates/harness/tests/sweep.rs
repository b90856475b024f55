mod common;

use moc_harness::config::set_path;
use moc_harness::output::Manifest;
use moc_harness::sweep::{cmd_sweep, expand_grid};
use moc_harness::HarnessError;
use serde_json::json;

#[test]
fn grid_expands_to_the_cartesian_product() {
    let mut doc = common::four_rooms(std::path::Path::new("base"), 1, 4);
    let lrs: Vec<f64> = [-1, -2, -3]
        .iter()
        .flat_map(|&i| [2.0, 4.0, 6.0, 8.0].map(|m| m * 10f64.powi(i)))
        .collect();
    set_path(&mut doc, "grid", json!({"learner.lr": lrs})).unwrap();
    let points = expand_grid(&doc).unwrap();
    assert_eq!(points.len(), 12);
    assert_eq!(points[5].config.learner.lr, lrs[5]);
    assert!(points[5].config.harness.output_dir.ends_with("point_005"));
    assert!(points.iter().all(|p| p.config.grid.is_none()));

    let mut doc = common::four_rooms(std::path::Path::new("base"), 1, 4);
    set_path(&mut doc, "grid", json!({"learner.eta": [0.1, 0.5, 0.9], "learner.lr": [0.2, 0.4]})).unwrap();
    let points = expand_grid(&doc).unwrap();
    assert_eq!(points.len(), 6);
    let order: Vec<(f64, f64)> = points.iter().map(|p| (p.config.learner.eta, p.config.learner.lr)).collect();
    assert_eq!(order[..3], [(0.1, 0.2), (0.1, 0.4), (0.5, 0.2)]);
}

#[test]
fn empty_or_oversized_grids_are_config_errors() {
    let base = common::four_rooms(std::path::Path::new("base"), 1, 4);
    for grid in [json!(null), json!({}), json!({"learner.lr": []})] {
        let mut doc = base.clone();
        set_path(&mut doc, "grid", grid).unwrap();
        assert!(matches!(expand_grid(&doc), Err(HarnessError::Config(_))));
    }
    let mut doc = base.clone();
    set_path(&mut doc, "grid", json!({"learner.lr": [0.1, 0.2, 0.3], "learner.eta": [0.1, 0.2]})).unwrap();
    set_path(&mut doc, "harness.max_grid_points", json!(5)).unwrap();
    let err = expand_grid(&doc).unwrap_err();
    assert!(err.to_string().contains("6 points"), "{err}");
    let mut doc = base;
    set_path(&mut doc, "grid", json!({"learner.speed": [1]})).unwrap();
    assert!(matches!(expand_grid(&doc), Err(HarnessError::Config(m)) if m.contains("speed")));
}

#[test]
fn sweep_writes_a_run_per_point_and_a_ranking() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc = common::four_rooms(tmp.path(), 2, 30);
    set_path(&mut doc, "grid", json!({"learner.lr": [0.1, 0.8]})).unwrap();
    let ranked = cmd_sweep(&doc, false).unwrap();
    assert_eq!(ranked.len(), 2);
    assert_eq!(ranked.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1, 2]);
    // fewer steps per episode ranks first
    assert!(ranked[0].metric <= ranked[1].metric);
    assert_eq!(ranked[0].score, -ranked[0].metric);
    for p in ["point_000", "point_001"] {
        assert_eq!(Manifest::read(&tmp.path().join(p)).unwrap().kind, "run");
    }
    let ranking = std::fs::read_to_string(tmp.path().join("ranking.csv")).unwrap();
    let lines: Vec<&str> = ranking.lines().collect();
    assert_eq!(lines[0], "rank,point,mean_steps,learner.lr");
    assert!(lines[1].starts_with(&format!("1,point_{:03},", ranked[0].point)));
    assert_eq!(Manifest::read(tmp.path()).unwrap().kind, "sweep");
    assert!(matches!(cmd_sweep(&doc, false), Err(HarnessError::OutputExists(_))));
    cmd_sweep(&doc, true).unwrap();
}
