//! Per-seed CSVs, manifests and output directory handling.

use std::fs;
use std::path::{Path, PathBuf};

use moc_core::env::Phase;
use moc_core::learning::EpisodeMetrics;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::{HarnessError, Result};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";
pub const AGGREGATE: &str = "aggregate.csv";

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn seed_file_name(index: usize) -> String {
    format!("seed_{index:03}.csv")
}

/// A seed as identified across directories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeedId {
    pub master_seed: u64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    /// `run`, `sweep` or `aggregate`.
    pub kind: String,
    pub config: Value,
    pub config_hash: String,
    pub seeds: Vec<SeedId>,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(kind: &str, config: &ExperimentConfig, seeds: Vec<SeedId>, files: Vec<String>) -> Self {
        let config = serde_json::to_value(config).expect("config serializes");
        Manifest {
            artifact: ARTIFACT.into(),
            version: VERSION.into(),
            kind: kind.into(),
            config_hash: config_hash(&config),
            config,
            seeds,
            files,
            sources: Vec::new(),
        }
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Aggregate(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// SHA-256 of the compact JSON form. serde_json keeps object keys sorted,
/// so equal configs hash equally.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Creates `dir`, or clears the files an earlier run left there when
/// `force` is set. Anything else in the directory is left alone.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let ours: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(is_harness_file))
            .collect();
        if ours.is_empty() {
            return Ok(());
        }
        if !force {
            return Err(HarnessError::OutputExists(dir.display().to_string()));
        }
        for path in ours {
            if path.is_dir() {
                fs::remove_dir_all(path)?;
            } else {
                fs::remove_file(path)?;
            }
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn is_harness_file(name: &str) -> bool {
    let numbered = |prefix: &str, suffix: &str| {
        name.strip_prefix(prefix)
            .and_then(|r| r.strip_suffix(suffix))
            .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
    };
    name == MANIFEST || name == AGGREGATE || name == "ranking.csv" || numbered("seed_", ".csv") || numbered("point_", "")
}

pub fn seed_header(n_options: usize) -> Vec<String> {
    let mut header: Vec<String> = ["episode", "steps", "return", "phase"].iter().map(|s| s.to_string()).collect();
    header.extend((0..n_options).map(|k| format!("option_{k}_mean_duration")));
    header.push("info_radius".into());
    header
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_seed_csv(path: &Path, episodes: &[EpisodeMetrics], n_options: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(seed_header(n_options)).map_err(csv_err)?;
    for e in episodes {
        let mut row = vec![e.episode.to_string(), e.steps.to_string(), fmt_f64(e.ret), e.phase.as_str().to_string()];
        row.extend((0..n_options).map(|k| opt_cell(e.option_durations.get(k).copied().flatten())));
        row.push(opt_cell(e.info_radius));
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_seed_csv(path: &Path) -> Result<Vec<EpisodeMetrics>> {
    let bad = |msg: String| HarnessError::Aggregate(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let n_options = header.len().checked_sub(5).ok_or_else(|| bad("too few columns".into()))?;
    if header.iter().collect::<Vec<_>>() != seed_header(n_options) {
        return Err(bad("unexpected header".into()));
    }
    let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let opt = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let int = |i: usize| record[i].parse::<usize>().map_err(|e| bad(format!("{:?}: {e}", &record[i])));
        let phase = match &record[3] {
            "source" => Phase::Source,
            "transfer" => Phase::Transfer,
            other => return Err(bad(format!("unknown phase {other:?}"))),
        };
        rows.push(EpisodeMetrics {
            episode: int(0)?,
            steps: int(1)?,
            ret: float(&record[2])?,
            phase,
            option_durations: (0..n_options).map(|k| opt(&record[4 + k])).collect::<Result<_>>()?,
            info_radius: opt(&record[4 + n_options])?,
        });
    }
    Ok(rows)
}

pub(crate) fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}
