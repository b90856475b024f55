//! Hyperparameter sweeps over the config's `grid` section.

use std::path::{Path, PathBuf};

use moc_core::env::EnvSpec;
use serde_json::Value;

use crate::config::{set_path, Budget, ExperimentConfig};
use crate::output::{self, csv_err, fmt_f64, Manifest};
use crate::run::{cmd_run, SeedRun};
use crate::{HarnessError, Result};

pub const RANKING: &str = "ranking.csv";

/// One expanded grid point.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub index: usize,
    /// `(dotted path, value)` pairs in key order.
    pub assignment: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RankedPoint {
    pub rank: usize,
    pub point: usize,
    /// Higher is better.
    pub score: f64,
    /// Mean steps (FourRooms) or mean return (MountainCar).
    pub metric: f64,
    pub assignment: Vec<(String, Value)>,
    pub dir: PathBuf,
}

/// Cartesian product of the grid, last key varying fastest. Each point is
/// the base config with its values set, the grid removed, and its own
/// `point_NNN` output directory below the base one.
pub fn expand_grid(raw: &Value) -> Result<Vec<GridPoint>> {
    let base = ExperimentConfig::from_json(&raw.to_string())?;
    let grid = match &base.grid {
        Some(g) if !g.is_empty() && g.values().all(|v| !v.is_empty()) => g.clone(),
        _ => return Err(HarnessError::Config("grid: a sweep needs at least one key with at least one value".into())),
    };
    let total = grid.values().try_fold(1usize, |acc, v| acc.checked_mul(v.len())).unwrap_or(usize::MAX);
    if total > base.harness.max_grid_points {
        return Err(HarnessError::Config(format!(
            "grid: {total} points exceed harness.max_grid_points = {}",
            base.harness.max_grid_points
        )));
    }
    let keys: Vec<&String> = grid.keys().collect();
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut rest = index;
        let mut assignment = Vec::with_capacity(keys.len());
        for key in keys.iter().rev() {
            let values = &grid[*key];
            assignment.push(((*key).clone(), values[rest % values.len()].clone()));
            rest /= values.len();
        }
        assignment.reverse();
        let mut doc = raw.clone();
        if let Some(o) = doc.as_object_mut() {
            o.remove("grid");
        }
        for (key, value) in &assignment {
            set_path(&mut doc, key, value.clone())?;
        }
        let dir = base.harness.output_dir.join(point_dir(index));
        set_path(&mut doc, "harness.output_dir", Value::String(dir.to_string_lossy().into_owned()))?;
        let config = ExperimentConfig::from_json(&doc.to_string())
            .map_err(|e| HarnessError::Config(format!("grid point {index}: {e}")))?;
        points.push(GridPoint { index, assignment, config });
    }
    Ok(points)
}

pub fn point_dir(index: usize) -> String {
    format!("point_{index:03}")
}

/// Mean over seeds of the per-seed mean over the final window of the last
/// phase: steps per episode for FourRooms (lower is better), return for
/// MountainCar (higher is better). Returned so that higher is better.
pub fn final_window_score(config: &ExperimentConfig, runs: &[SeedRun]) -> Result<f64> {
    let window = config.harness.final_window;
    let budget = config.budget()?;
    let per_seed: Vec<f64> = runs
        .iter()
        .filter_map(|run| {
            let episodes = &run.metrics.episodes;
            let phase = episodes.last()?.phase;
            let start = episodes.iter().position(|e| e.phase == phase)?;
            let tail = &episodes[start..];
            let kept = match budget {
                Budget::Episodes(_) => {
                    let k = ((tail.len() as f64 * window).ceil() as usize).clamp(1, tail.len());
                    &tail[tail.len() - k..]
                }
                Budget::Timesteps(_) => {
                    let total: usize = tail.iter().map(|e| e.steps).sum();
                    let cutoff = total as f64 * (1.0 - window);
                    let mut elapsed = 0;
                    let first = tail
                        .iter()
                        .position(|e| {
                            elapsed += e.steps;
                            elapsed as f64 > cutoff
                        })
                        .unwrap_or(tail.len() - 1);
                    &tail[first..]
                }
            };
            let value = |e: &moc_core::learning::EpisodeMetrics| match config.env {
                EnvSpec::FourRooms(_) => -(e.steps as f64),
                EnvSpec::MountainCarSparse(_) => e.ret,
            };
            Some(kept.iter().map(value).sum::<f64>() / kept.len() as f64)
        })
        .collect();
    if per_seed.is_empty() {
        return Err(HarnessError::Aggregate("no episodes to score".into()));
    }
    Ok(per_seed.iter().sum::<f64>() / per_seed.len() as f64)
}

/// The `sweep` command: one run per grid point, then `ranking.csv` (best
/// first) and a manifest in the base output directory.
pub fn cmd_sweep(raw: &Value, force: bool) -> Result<Vec<RankedPoint>> {
    let points = expand_grid(raw)?;
    let base = ExperimentConfig::from_json(&raw.to_string())?;
    let dir = base.harness.output_dir.clone();
    output::prepare_dir(&dir, force)?;
    let mut ranked = Vec::with_capacity(points.len());
    for point in &points {
        let runs = cmd_run(&point.config, force)?;
        let score = final_window_score(&point.config, &runs)?;
        let metric = match base.env {
            EnvSpec::FourRooms(_) => -score,
            EnvSpec::MountainCarSparse(_) => score,
        };
        ranked.push(RankedPoint {
            rank: 0,
            point: point.index,
            score,
            metric,
            assignment: point.assignment.clone(),
            dir: point.config.harness.output_dir.clone(),
        });
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.point.cmp(&b.point)));
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    write_ranking(&dir.join(RANKING), &base, &ranked)?;
    let mut files: Vec<String> = points.iter().map(|p| point_dir(p.index)).collect();
    files.push(RANKING.into());
    let seeds = (0..base.harness.n_seeds)
        .map(|index| output::SeedId { master_seed: base.harness.master_seed, index })
        .collect();
    Manifest::new("sweep", &base, seeds, files).write(&dir.join(output::MANIFEST))?;
    Ok(ranked)
}

fn write_ranking(path: &Path, base: &ExperimentConfig, ranked: &[RankedPoint]) -> Result<()> {
    let metric = match base.env {
        EnvSpec::FourRooms(_) => "mean_steps",
        EnvSpec::MountainCarSparse(_) => "mean_return",
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["rank".to_string(), "point".to_string(), metric.to_string()];
    if let Some(first) = ranked.first() {
        header.extend(first.assignment.iter().map(|(k, _)| k.clone()));
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in ranked {
        let mut row = vec![r.rank.to_string(), point_dir(r.point), fmt_f64(r.metric)];
        row.extend(r.assignment.iter().map(|(_, v)| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
