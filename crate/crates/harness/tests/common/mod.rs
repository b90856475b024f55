#![allow(dead_code)]

use std::path::Path;

use moc_harness::config::ExperimentConfig;
use serde_json::{json, Value};

/// A small FourRooms MOC experiment writing to `dir`.
pub fn four_rooms(dir: &Path, n_seeds: usize, episodes: usize) -> Value {
    json!({
        "env": {"name": "four_rooms"},
        "learner": {"algorithm": "moc", "lr": 0.8, "eta": 0.3},
        "options": {"n_options": 4},
        "features": {"kind": "one_hot"},
        "harness": {
            "n_seeds": n_seeds,
            "master_seed": 11,
            "episodes": episodes,
            "transfer_at": episodes / 2,
            "info_radius_every": 5,
            "output_dir": dir,
        }
    })
}

pub fn parse(doc: &Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&doc.to_string()).unwrap()
}
