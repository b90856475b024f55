use rand::Rng;

use super::{EpisodeMetrics, LearnerConfig};
use crate::approx::FeatureVec;
use crate::env::Environment;
use crate::math::sample_categorical;
use crate::options::OptionSet;
use crate::{Error, Result};

struct Step {
    phi: FeatureVec,
    action: usize,
    reward: f64,
}

/// One episode of the flat actor-critic baseline.
///
/// `set` must hold a single option: its policy is the actor and θ is the
/// linear critic V(s). Transitions are collected for `n_step` steps (or to
/// the end of the episode), then each collected state is moved toward its
/// n-step return `G = r + γr' + ... + γ^k V(s_k)`, with advantage `G - V(s)`
/// driving the actor. Returns and advantages are formed before the batch is
/// applied. With `n_step = 1` this is one-step actor-critic.
pub fn run_flat_ac<E, F, R>(
    set: &mut OptionSet,
    env: &E,
    featurize: F,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<EpisodeMetrics>
where
    E: Environment,
    F: Fn(&E::State) -> Result<FeatureVec>,
    R: Rng + ?Sized,
{
    if set.n_options != 1 {
        return Err(Error::InvalidConfig(format!(
            "flat actor-critic needs exactly one option, got {}",
            set.n_options
        )));
    }
    let phase = env.phase();
    let mut state = env.reset(rng);
    let mut phi = featurize(&state)?;
    let mut batch: Vec<Step> = Vec::with_capacity(config.n_step);
    let (mut steps, mut ret) = (0, 0.0);
    loop {
        let probs = set.intra_policy_dist(&phi, 0)?;
        let action = sample_categorical(&probs, rng);
        let outcome = env.step(&state, action, rng)?;
        let next_phi = featurize(&outcome.next_state)?;
        steps += 1;
        ret += outcome.reward;
        batch.push(Step { phi, action, reward: outcome.reward });
        let finished = outcome.done || steps >= env.max_episode_steps();
        if batch.len() >= config.n_step || finished {
            let bootstrap = if outcome.done { 0.0 } else { set.q_value(&next_phi, 0) };
            apply_batch(set, &batch, bootstrap, config)?;
            batch.clear();
        }
        if finished {
            break;
        }
        state = outcome.next_state;
        phi = next_phi;
    }
    Ok(EpisodeMetrics {
        episode: 0,
        steps,
        ret,
        phase,
        option_durations: vec![Some(steps as f64)],
        info_radius: None,
    })
}

fn apply_batch(set: &mut OptionSet, batch: &[Step], bootstrap: f64, config: &LearnerConfig) -> Result<()> {
    let mut g = bootstrap;
    let mut advantages = vec![0.0; batch.len()];
    for (i, step) in batch.iter().enumerate().rev() {
        g = step.reward + config.discount * g;
        advantages[i] = g - set.q_value(&step.phi, 0);
    }
    let (alpha_v, alpha_pi) = (config.alpha_values(), config.alpha_policy());
    let mut grads = Vec::with_capacity(batch.len());
    for (step, &adv) in batch.iter().zip(&advantages) {
        if adv != 0.0 {
            grads.push((set.grad_log_policy(&step.phi, 0, step.action)?, alpha_pi * adv));
        }
    }
    for (grad, scale) in grads {
        for (w, g) in set.policy_params_mut().iter_mut().zip(&grad) {
            *w += scale * g;
        }
    }
    for (step, &adv) in batch.iter().zip(&advantages) {
        step.phi.add_scaled_to(alpha_v * adv, &mut set.theta);
    }
    Ok(())
}
