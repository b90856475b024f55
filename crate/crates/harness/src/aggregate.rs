//! Across-seed mean curves with percentile-bootstrap 80% intervals.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use moc_core::learning::EpisodeMetrics;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::config::{Budget, ExperimentConfig};
use crate::output::{self, csv_err, fmt_f64, Manifest, SeedId};
use crate::{HarnessError, Result};

pub const RESAMPLES: usize = 1000;
pub const LOWER_PERCENTILE: f64 = 0.1;
pub const UPPER_PERCENTILE: f64 = 0.9;
const BOOTSTRAP_SEED: u64 = 0x5eed_b007;

/// Mean with its 80% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    /// Episode index, or the end of a timestep bin.
    pub x: Vec<f64>,
    pub metrics: Vec<String>,
    /// `points[i][m]`: metric `m` at `x[i]`; `None` where no seed has a value.
    pub points: Vec<Vec<Option<Interval>>>,
    pub config_hash: String,
    pub seeds: Vec<SeedId>,
}

/// Linear interpolation between order statistics (`sorted` ascending).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (i, frac) = (h.floor() as usize, h - h.floor());
    match sorted.get(i + 1) {
        Some(next) if frac > 0.0 => sorted[i] + frac * (next - sorted[i]),
        _ => sorted[i],
    }
}

/// Percentile bootstrap of the mean of `values`. The interval is widened to
/// contain the mean if resampling left it outside.
pub fn bootstrap_interval<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> Interval {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 || values.iter().all(|&v| v == values[0]) {
        return Interval { mean, lo: mean, hi: mean };
    }
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let lo = quantile(&means, LOWER_PERCENTILE).min(mean);
    let hi = quantile(&means, UPPER_PERCENTILE).max(mean);
    Interval { mean, lo, hi }
}

/// One seed's rows.
#[derive(Debug, Clone)]
pub struct SeedCurve {
    pub id: SeedId,
    pub episodes: Vec<EpisodeMetrics>,
}

fn metric_names(n_options: usize) -> Vec<String> {
    let mut names = vec!["steps".to_string(), "return".to_string()];
    names.extend((0..n_options).map(|k| format!("option_{k}_mean_duration")));
    names.push("info_radius".into());
    names
}

fn metric_values(e: &EpisodeMetrics, n_options: usize) -> Vec<Option<f64>> {
    let mut v = vec![Some(e.steps as f64), Some(e.ret)];
    v.extend((0..n_options).map(|k| e.option_durations.get(k).copied().flatten()));
    v.push(e.info_radius);
    v
}

/// Per-seed table `[x][metric]` on the shared x axis.
fn align(seed: &SeedCurve, budget: Budget, bin_width: usize, n_options: usize) -> Vec<Vec<Option<f64>>> {
    let n_metrics = n_options + 3;
    match budget {
        Budget::Episodes(n) => {
            let mut table = vec![vec![None; n_metrics]; n];
            for e in seed.episodes.iter().filter(|e| e.episode < n) {
                table[e.episode] = metric_values(e, n_options);
            }
            table
        }
        Budget::Timesteps(t) => {
            // mean of the episodes ending in each bin; empty bins repeat the last value
            let n_bins = t.div_ceil(bin_width);
            let mut sums = vec![vec![(0.0, 0usize); n_metrics]; n_bins];
            let mut elapsed = 0;
            for e in &seed.episodes {
                elapsed += e.steps;
                let bin = (elapsed.saturating_sub(1) / bin_width).min(n_bins - 1);
                for (m, v) in metric_values(e, n_options).into_iter().enumerate() {
                    if let Some(v) = v {
                        sums[bin][m].0 += v;
                        sums[bin][m].1 += 1;
                    }
                }
            }
            let mut carry = vec![None; n_metrics];
            sums.into_iter()
                .map(|bin| {
                    for (m, (sum, count)) in bin.into_iter().enumerate() {
                        if count > 0 {
                            carry[m] = Some(sum / count as f64);
                        }
                    }
                    carry.clone()
                })
                .collect()
        }
    }
}

/// Aggregates seeds that share `config` (budget and option count).
pub fn aggregate_seeds(config: &ExperimentConfig, seeds: &[SeedCurve], bin_width: usize) -> Result<AggregateCurve> {
    if seeds.len() < 2 {
        return Err(HarnessError::Aggregate(format!("need at least 2 seeds, got {}", seeds.len())));
    }
    if bin_width == 0 {
        return Err(HarnessError::Aggregate("bin width must be positive".into()));
    }
    let budget = config.budget()?;
    let n_options = config.effective_options();
    let tables: Vec<_> = seeds.iter().map(|s| align(s, budget, bin_width, n_options)).collect();
    let x: Vec<f64> = match budget {
        Budget::Episodes(n) => (0..n).map(|i| i as f64).collect(),
        Budget::Timesteps(t) => (1..=t.div_ceil(bin_width)).map(|b| (b * bin_width).min(t) as f64).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let points = (0..x.len())
        .map(|i| {
            (0..n_options + 3)
                .map(|m| {
                    let values: Vec<f64> = tables.iter().filter_map(|t| t[i][m]).collect();
                    (!values.is_empty()).then(|| bootstrap_interval(&values, RESAMPLES, &mut rng))
                })
                .collect()
        })
        .collect();
    Ok(AggregateCurve {
        x,
        metrics: metric_names(n_options),
        points,
        config_hash: output::config_hash(&serde_json::to_value(config).expect("config serializes")),
        seeds: seeds.iter().map(|s| s.id).collect(),
    })
}

pub fn write_aggregate_csv(path: &Path, curve: &AggregateCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["x".to_string()];
    for m in &curve.metrics {
        header.extend(["mean", "lo80", "hi80"].iter().map(|s| format!("{m}_{s}")));
    }
    w.write_record(&header).map_err(csv_err)?;
    for (x, row) in curve.x.iter().zip(&curve.points) {
        let mut cells = vec![fmt_f64(*x)];
        for p in row {
            match p {
                Some(p) => cells.extend([fmt_f64(p.mean), fmt_f64(p.lo), fmt_f64(p.hi)]),
                None => cells.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&cells).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// The config with the fields that may differ between batches of the same
/// experiment removed.
fn comparable(config: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Some(h) = v.get_mut("harness").and_then(Value::as_object_mut) {
        for key in ["n_seeds", "master_seed", "output_dir", "threads"] {
            h.remove(key);
        }
    }
    if let Some(o) = v.as_object_mut() {
        o.remove("grid");
    }
    v
}

/// Loads every seed CSV listed in the run manifests of `dirs`.
pub fn load_runs(dirs: &[PathBuf]) -> Result<(ExperimentConfig, Vec<SeedCurve>)> {
    let mut first: Option<(ExperimentConfig, Value)> = None;
    let mut seeds = Vec::new();
    let mut seen = BTreeSet::new();
    for dir in dirs {
        let manifest = Manifest::read(dir)?;
        if manifest.kind != "run" {
            return Err(HarnessError::Aggregate(format!("{}: not a run directory", dir.display())));
        }
        let config: ExperimentConfig = serde_json::from_value(manifest.config.clone())
            .map_err(|e| HarnessError::Aggregate(format!("{}: {e}", dir.display())))?;
        let key = comparable(&config);
        match &first {
            None => first = Some((config, key)),
            Some((_, k)) if *k != key => {
                return Err(HarnessError::Aggregate(format!(
                    "{}: config differs from {}",
                    dir.display(),
                    dirs[0].display()
                )));
            }
            Some(_) => {}
        }
        for id in manifest.seeds {
            if !seen.insert(id) {
                return Err(HarnessError::Aggregate(format!(
                    "seed {} of master seed {} appears twice",
                    id.index, id.master_seed
                )));
            }
            let episodes = output::read_seed_csv(&dir.join(output::seed_file_name(id.index)))?;
            seeds.push(SeedCurve { id, episodes });
        }
    }
    let (config, _) = first.ok_or_else(|| HarnessError::Aggregate("no run directories given".into()))?;
    Ok((config, seeds))
}

/// The `aggregate` command: pools the seeds of `dirs` into `out` and writes
/// a manifest next to it.
pub fn cmd_aggregate(dirs: &[PathBuf], out: &Path, bin_width: Option<usize>) -> Result<AggregateCurve> {
    let (config, seeds) = load_runs(dirs)?;
    let curve = aggregate_seeds(&config, &seeds, bin_width.unwrap_or(config.harness.bin_width))?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_aggregate_csv(out, &curve)?;
    let mut manifest = Manifest::new("aggregate", &config, curve.seeds.clone(), vec![file_name(out)]);
    manifest.sources = dirs.to_vec();
    let mut sidecar = out.as_os_str().to_owned();
    sidecar.push(".manifest.json");
    manifest.write(Path::new(&sidecar))?;
    Ok(curve)
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
