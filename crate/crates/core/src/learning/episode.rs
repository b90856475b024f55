use rand::Rng;
use serde::Serialize;

use super::{apply_updates, LearnerConfig};
use crate::approx::FeatureVec;
use crate::env::{Environment, Phase};
use crate::options::{call_and_return_step, OptionSet, TransitionRecord};
use crate::Result;

/// One row of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub steps: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub phase: Phase,
    /// Mean length of each option's executions; `None` if it never ran.
    pub option_durations: Vec<Option<f64>>,
    pub info_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunMetrics {
    pub episodes: Vec<EpisodeMetrics>,
}

impl RunMetrics {
    pub fn total_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.steps).sum()
    }
}

struct DurationTracker {
    totals: Vec<usize>,
    counts: Vec<usize>,
    current: usize,
}

impl DurationTracker {
    fn new(n_options: usize) -> Self {
        DurationTracker { totals: vec![0; n_options], counts: vec![0; n_options], current: 0 }
    }

    fn close(&mut self, option: usize) {
        if self.current > 0 {
            self.totals[option] += self.current;
            self.counts[option] += 1;
            self.current = 0;
        }
    }

    fn means(&self) -> Vec<Option<f64>> {
        self.totals
            .iter()
            .zip(&self.counts)
            .map(|(&t, &c)| (c > 0).then(|| t as f64 / c as f64))
            .collect()
    }
}

/// Runs one episode of call-and-return execution with learning.
///
/// Records are buffered and the updates of [`apply_updates`] are applied in
/// order every `n_step` transitions and at the end of the episode. The
/// episode ends at a terminal state or after `max_episode_steps` steps.
/// `on_update` observes the parameters after each record's updates.
pub fn run_episode<E, F, R, H>(
    set: &mut OptionSet,
    env: &E,
    featurize: F,
    config: &LearnerConfig,
    rng: &mut R,
    mut on_update: H,
) -> Result<EpisodeMetrics>
where
    E: Environment,
    F: Fn(&E::State) -> Result<FeatureVec>,
    R: Rng + ?Sized,
    H: FnMut(&OptionSet, &TransitionRecord),
{
    let phase = env.phase();
    let mut state = env.reset(rng);
    let mut option = set.initial_option(&featurize(&state)?, rng)?;
    let mut previous = None;
    let mut buffer: Vec<TransitionRecord> = Vec::with_capacity(config.n_step);
    let mut durations = DurationTracker::new(set.n_options);
    let (mut steps, mut ret) = (0, 0.0);
    loop {
        let (record, next_state) = call_and_return_step(set, env, &featurize, &state, previous, option, rng)?;
        steps += 1;
        ret += record.reward;
        durations.current += 1;
        let finished = record.terminal || steps >= env.max_episode_steps();
        if record.terminated || finished {
            durations.close(option);
        }
        let next_option = record.next_option;
        buffer.push(record);
        if buffer.len() >= config.n_step || finished {
            for record in buffer.drain(..) {
                apply_updates(set, &record, config, rng)?;
                on_update(set, &record);
            }
        }
        if finished {
            break;
        }
        previous = Some(option);
        option = next_option;
        state = next_state;
    }
    Ok(EpisodeMetrics {
        episode: 0,
        steps,
        ret,
        phase,
        option_durations: durations.means(),
        info_radius: None,
    })
}

/// [`run_episode`] without an observer.
pub fn run_episode_moc<E, F, R>(
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
    run_episode(set, env, featurize, config, rng, |_, _| {})
}
