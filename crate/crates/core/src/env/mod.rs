//! Environments: FourRooms, sparse MountainCar, and the exact tabular MDP used
//! by the analysis oracles.

mod four_rooms;
mod mountain_car;
mod tabular;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Result;

pub use four_rooms::{Cell, FourRoomsConfig, FourRoomsEnv, Move, Room};
pub use mountain_car::{CarState, MountainCarConfig, MountainCarEnv};
pub use tabular::TabularMdp;

/// Whether the transfer mutation has been applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Source,
    Transfer,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Source => "source",
            Phase::Transfer => "transfer",
        }
    }
}

/// Result of one environment transition.
///
/// `done` is set when `next_state` is terminal. The episode step cap is
/// enforced by the episode drivers, which mark truncation separately.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S> {
    pub next_state: S,
    pub reward: f64,
    pub done: bool,
}

/// An episodic environment whose dynamics are a pure function of
/// `(state, action, rng)`. Handles carry configuration and phase only, so the
/// same handle may drive any number of episodes.
pub trait Environment {
    type State: Clone + std::fmt::Debug;

    fn n_actions(&self) -> usize;
    fn max_episode_steps(&self) -> usize;
    fn phase(&self) -> Phase;
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;
    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: usize,
        rng: &mut R,
    ) -> Result<StepOutcome<Self::State>>;
    fn is_terminal(&self, state: &Self::State) -> bool;
    /// Real-valued view of a state (grid coordinates or position/velocity).
    fn observe(&self, state: &Self::State) -> Vec<f64>;
    fn apply_transfer(&mut self) -> Result<()>;
}

/// Environment descriptor as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EnvSpec {
    FourRooms(FourRoomsConfig),
    MountainCarSparse(MountainCarConfig),
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::FourRooms(_) => "four_rooms",
            EnvSpec::MountainCarSparse(_) => "mountain_car_sparse",
        }
    }

    /// Looks up a registered environment by name with default parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "four_rooms" => Ok(EnvSpec::FourRooms(FourRoomsConfig::default())),
            "mountain_car_sparse" => Ok(EnvSpec::MountainCarSparse(MountainCarConfig::default())),
            other => Err(crate::Error::UnknownEnvironment(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub enum EnvHandle {
    FourRooms(FourRoomsEnv),
    MountainCar(MountainCarEnv),
}

/// Builds an environment in the source phase. `seed` drives the
/// environment's own randomness (the transfer goal draw); step noise comes
/// from the generator passed to each step.
pub fn make_env(spec: &EnvSpec, seed: u64) -> Result<EnvHandle> {
    match spec {
        EnvSpec::FourRooms(cfg) => Ok(EnvHandle::FourRooms(FourRoomsEnv::new(cfg.clone(), seed)?)),
        EnvSpec::MountainCarSparse(cfg) => {
            Ok(EnvHandle::MountainCar(MountainCarEnv::new(cfg.clone())?))
        }
    }
}

impl EnvHandle {
    pub fn phase(&self) -> Phase {
        match self {
            EnvHandle::FourRooms(e) => e.phase(),
            EnvHandle::MountainCar(e) => e.phase(),
        }
    }

    pub fn apply_transfer(&mut self) -> Result<()> {
        match self {
            EnvHandle::FourRooms(e) => e.apply_transfer(),
            EnvHandle::MountainCar(e) => e.apply_transfer(),
        }
    }

    pub fn to_tabular(&self) -> Result<TabularMdp> {
        match self {
            EnvHandle::FourRooms(e) => Ok(e.to_tabular()),
            EnvHandle::MountainCar(_) => Err(crate::Error::NotTabular),
        }
    }
}
