use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Phase, StepOutcome};
use crate::{Error, Result};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub position: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MountainCarConfig {
    pub gravity_scale: f64,
    /// Multiplier applied to `gravity_scale` by the transfer mutation.
    pub transfer_gravity_factor: f64,
    pub goal_position: f64,
    pub max_episode_steps: usize,
}

impl Default for MountainCarConfig {
    fn default() -> Self {
        MountainCarConfig {
            gravity_scale: 1.0,
            transfer_gravity_factor: 2.0,
            goal_position: 0.5,
            max_episode_steps: 2000,
        }
    }
}

/// Mountain car with a single +1 reward on reaching the goal.
///
/// Actions are `0` (push left), `1` (no push) and `2` (push right).
#[derive(Debug, Clone)]
pub struct MountainCarEnv {
    config: MountainCarConfig,
    gravity_scale: f64,
    phase: Phase,
}

impl MountainCarEnv {
    pub fn new(config: MountainCarConfig) -> Result<Self> {
        if !(config.gravity_scale > 0.0 && config.gravity_scale.is_finite()) {
            return Err(Error::OutOfRange {
                name: "gravity_scale",
                value: config.gravity_scale,
                expected: "> 0",
            });
        }
        if !(config.transfer_gravity_factor > 0.0) {
            return Err(Error::OutOfRange {
                name: "transfer_gravity_factor",
                value: config.transfer_gravity_factor,
                expected: "> 0",
            });
        }
        if !(config.goal_position > MIN_POSITION && config.goal_position <= MAX_POSITION) {
            return Err(Error::OutOfRange {
                name: "goal_position",
                value: config.goal_position,
                expected: "(-1.2, 0.6]",
            });
        }
        if config.max_episode_steps == 0 {
            return Err(Error::OutOfRange {
                name: "max_episode_steps",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(MountainCarEnv { gravity_scale: config.gravity_scale, config, phase: Phase::Source })
    }

    pub fn gravity_scale(&self) -> f64 {
        self.gravity_scale
    }

    pub fn goal_position(&self) -> f64 {
        self.config.goal_position
    }

    /// Deterministic dynamics.
    pub fn transition(&self, state: CarState, action: usize) -> CarState {
        let effect = action as f64 - 1.0;
        let mut velocity = state.velocity + FORCE * effect
            - self.gravity_scale * GRAVITY * (3.0 * state.position).cos();
        velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
        let position = (state.position + velocity).clamp(MIN_POSITION, MAX_POSITION);
        if position == MIN_POSITION && velocity < 0.0 {
            velocity = 0.0;
        }
        CarState { position, velocity }
    }
}

impl Environment for MountainCarEnv {
    type State = CarState;

    fn n_actions(&self) -> usize {
        3
    }

    fn max_episode_steps(&self) -> usize {
        self.config.max_episode_steps
    }

    fn phase(&self) -> Phase {
        self.phase
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> CarState {
        CarState { position: rng.random_range(-0.6..-0.4), velocity: 0.0 }
    }

    fn step<R: Rng + ?Sized>(&self, state: &CarState, action: usize, _rng: &mut R) -> Result<StepOutcome<CarState>> {
        if action >= 3 {
            return Err(Error::InvalidAction { action, n_actions: 3 });
        }
        if !(state.position.is_finite() && state.velocity.is_finite()) {
            return Err(Error::NonFinite("mountain car state"));
        }
        if self.is_terminal(state) {
            return Err(Error::TerminalState);
        }
        let next_state = self.transition(*state, action);
        let done = self.is_terminal(&next_state);
        Ok(StepOutcome { next_state, reward: if done { 1.0 } else { 0.0 }, done })
    }

    fn is_terminal(&self, state: &CarState) -> bool {
        state.position >= self.config.goal_position
    }

    fn observe(&self, state: &CarState) -> Vec<f64> {
        vec![state.position, state.velocity]
    }

    /// Multiplies gravity by the configured factor (doubling by default).
    fn apply_transfer(&mut self) -> Result<()> {
        if self.phase == Phase::Transfer {
            return Err(Error::TransferAlreadyApplied);
        }
        self.gravity_scale *= self.config.transfer_gravity_factor;
        self.phase = Phase::Transfer;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn push_right_from_rest() {
        let env = MountainCarEnv::new(MountainCarConfig::default()).unwrap();
        let next = env.transition(CarState { position: -0.5, velocity: 0.0 }, 2);
        let expected = 0.001 - 0.0025 * f64::cos(-1.5);
        assert!((next.velocity - expected).abs() < 1e-18);
        assert!((next.position - (-0.5 + expected)).abs() < 1e-18);
    }

    #[test]
    fn transfer_doubles_gravity_once() {
        let mut env = MountainCarEnv::new(MountainCarConfig::default()).unwrap();
        assert_eq!(env.gravity_scale(), 1.0);
        assert_eq!(env.goal_position(), 0.5);
        env.apply_transfer().unwrap();
        assert_eq!(env.gravity_scale(), 2.0);
        assert_eq!(env.apply_transfer(), Err(Error::TransferAlreadyApplied));
    }

    #[test]
    fn state_stays_in_bounds_and_reward_is_sparse() {
        let env = MountainCarEnv::new(MountainCarConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = env.reset(&mut rng);
        for _ in 0..5000 {
            let a = rng.random_range(0..3);
            let out = env.step(&s, a, &mut rng).unwrap();
            assert!((MIN_POSITION..=MAX_POSITION).contains(&out.next_state.position));
            assert!(out.next_state.velocity.abs() <= MAX_SPEED);
            assert_eq!(out.reward != 0.0, out.done);
            s = if out.done { env.reset(&mut rng) } else { out.next_state };
        }
    }

    #[test]
    fn left_wall_is_inelastic() {
        let env = MountainCarEnv::new(MountainCarConfig::default()).unwrap();
        let next = env.transition(CarState { position: -1.19, velocity: -0.05 }, 0);
        assert_eq!(next.position, MIN_POSITION);
        assert_eq!(next.velocity, 0.0);
    }
}
