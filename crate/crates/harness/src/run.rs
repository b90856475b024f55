//! Running one learner per seed.

use moc_core::analysis::information_radius;
use moc_core::approx::{rbf_fit, FeatureVec, RbfMap, TwoLayerActor};
use moc_core::env::{make_env, EnvHandle, Environment};
use moc_core::learning::{run_episode_moc, run_flat_ac, Algorithm, EpisodeMetrics, RunMetrics};
use moc_core::options::{hallway_options_with, OptionSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregate::{aggregate_seeds, write_aggregate_csv, SeedCurve};
use crate::config::{Budget, ExperimentConfig, FeatureConfig, MetaKind, OptionSource, PolicyKind};
use crate::output::{self, Manifest, SeedId};
use crate::Result;

/// Result of one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed_index: usize,
    pub metrics: RunMetrics,
    pub final_set: OptionSet,
}

/// Independent stream `index` of the master seed.
pub fn seed_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

fn build_option_set<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    env: &EnvHandle,
    n_actions: usize,
    dim: usize,
    rng: &mut R,
) -> Result<OptionSet> {
    let opts = &config.options;
    if let (OptionSource::Hallway, EnvHandle::FourRooms(fr), false) =
        (opts.source, env, config.learner.algorithm == Algorithm::Ac)
    {
        let fixed = hallway_options_with(fr, opts.epsilon_action, opts.off_target_termination)?;
        return Ok(fixed.to_option_set(opts.tau, opts.epsilon_mu)?);
    }
    let n_options = config.effective_options();
    let mut set = OptionSet::linear(n_options, n_actions, dim, opts.tau, opts.epsilon_mu)?;
    if opts.meta == MetaKind::Parameterized {
        set = set.with_parameterized_meta();
    }
    if opts.policy == PolicyKind::Network {
        let actor = TwoLayerActor::new(dim, opts.hidden, n_options, n_actions, rng);
        set = set.with_network_policy(actor)?;
    }
    Ok(set)
}

/// Drives episodes until the budget is spent, applying the transfer once.
fn train<E, F, R>(
    config: &ExperimentConfig,
    env: &mut E,
    featurize: F,
    set: &mut OptionSet,
    radius_states: &[FeatureVec],
    rng: &mut R,
) -> Result<RunMetrics>
where
    E: Environment,
    F: Fn(&E::State) -> moc_core::Result<FeatureVec>,
    R: Rng + ?Sized,
{
    let budget = config.budget()?;
    let transfer_step = match (budget, config.harness.transfer_at) {
        (Budget::Timesteps(t), Some(f)) => Some((f * t as f64).round() as usize),
        _ => None,
    };
    let transfer_episode = match (budget, config.harness.transfer_at) {
        (Budget::Episodes(_), Some(e)) => Some(e as usize),
        _ => None,
    };
    let weights = vec![1.0 / radius_states.len().max(1) as f64; radius_states.len()];
    let mut metrics = RunMetrics::default();
    let mut total_steps = 0;
    let mut episode = 0;
    loop {
        match budget {
            Budget::Episodes(n) if episode >= n => break,
            Budget::Timesteps(n) if total_steps >= n => break,
            _ => {}
        }
        let due = transfer_episode == Some(episode) || transfer_step.is_some_and(|t| total_steps >= t);
        if due && env.phase() == moc_core::env::Phase::Source {
            env.apply_transfer()?;
        }
        let mut row: EpisodeMetrics = match config.learner.algorithm {
            Algorithm::Ac => run_flat_ac(set, env, &featurize, &config.learner, rng)?,
            Algorithm::Moc | Algorithm::Oc => run_episode_moc(set, env, &featurize, &config.learner, rng)?,
        };
        row.episode = episode;
        episode += 1;
        total_steps += row.steps;
        if let Some(k) = config.harness.info_radius_every {
            if episode % k == 0 && !radius_states.is_empty() {
                row.info_radius = Some(information_radius(set, radius_states, &weights)?);
            }
        }
        metrics.episodes.push(row);
    }
    Ok(metrics)
}

/// Runs seed `index` of the experiment. Deterministic in (config, index).
pub fn run_seed(config: &ExperimentConfig, index: usize) -> Result<SeedRun> {
    let mut rng = seed_rng(config.harness.master_seed, index);
    let env_seed: u64 = rng.random();
    let handle = make_env(&config.env, env_seed)?;
    let (metrics, final_set) = match handle.clone() {
        EnvHandle::FourRooms(mut env) => {
            let n = env.n_states();
            let mut set = build_option_set(config, &handle, env.n_actions(), n, &mut rng)?;
            let states: Vec<FeatureVec> = (0..n).map(|s| FeatureVec::one_hot(s, n)).collect();
            let featurize = move |s: &usize| Ok(FeatureVec::one_hot(*s, n));
            let metrics = train(config, &mut env, featurize, &mut set, &states, &mut rng)?;
            (metrics, set)
        }
        EnvHandle::MountainCar(mut env) => {
            let FeatureConfig::Rbf { n_samples, radii, kernels_per_radius, radius_states } = &config.features else {
                unreachable!("validated config pairs MountainCar with RBF features")
            };
            let (map, samples) = rbf_fit(&env, *n_samples, radii, *kernels_per_radius, &mut rng)?;
            let dim = map.n_kernels() + 1;
            let mut set = build_option_set(config, &handle, env.n_actions(), dim, &mut rng)?;
            let stride = (samples.len() / (*radius_states).max(1)).max(1);
            let states = samples
                .iter()
                .step_by(stride)
                .take(*radius_states)
                .map(|p| map.features(p))
                .collect::<moc_core::Result<Vec<_>>>()?;
            let featurize = rbf_featurizer(&map, &env);
            let metrics = train(config, &mut env, featurize, &mut set, &states, &mut rng)?;
            (metrics, set)
        }
    };
    Ok(SeedRun { seed_index: index, metrics, final_set })
}

fn rbf_featurizer<'a, E: Environment>(
    map: &'a RbfMap,
    env: &E,
) -> impl Fn(&E::State) -> moc_core::Result<FeatureVec> + 'a
where
    E: Clone + 'a,
{
    let env = env.clone();
    move |s| map.features(&env.observe(s))
}

/// Runs every seed, in parallel when more than one thread is allowed. The
/// result is ordered by seed index and independent of the thread count.
pub fn run_all(config: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    use rayon::prelude::*;
    let seeds: Vec<usize> = (0..config.harness.n_seeds).collect();
    let work = || seeds.par_iter().map(|&i| run_seed(config, i)).collect::<Result<Vec<_>>>();
    match config.harness.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| crate::HarnessError::Io(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// The `run` command: trains every seed and writes the per-seed CSVs, the
/// aggregate (two or more seeds) and the manifest to the output directory.
pub fn cmd_run(config: &ExperimentConfig, force: bool) -> Result<Vec<SeedRun>> {
    let dir = &config.harness.output_dir;
    output::prepare_dir(dir, force)?;
    let runs = run_all(config)?;
    let n_options = config.effective_options();
    let mut files = Vec::new();
    let mut seeds = Vec::new();
    for run in &runs {
        let name = output::seed_file_name(run.seed_index);
        output::write_seed_csv(&dir.join(&name), &run.metrics.episodes, n_options)?;
        files.push(name);
        seeds.push(SeedId { master_seed: config.harness.master_seed, index: run.seed_index });
    }
    if runs.len() >= 2 {
        let curves: Vec<SeedCurve> = runs
            .iter()
            .zip(&seeds)
            .map(|(r, id)| SeedCurve { id: *id, episodes: r.metrics.episodes.clone() })
            .collect();
        let curve = aggregate_seeds(config, &curves, config.harness.bin_width)?;
        write_aggregate_csv(&dir.join(output::AGGREGATE), &curve)?;
        files.push(output::AGGREGATE.into());
    }
    Manifest::new("run", config, seeds, files).write(&dir.join(output::MANIFEST))?;
    Ok(runs)
}
