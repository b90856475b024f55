use crate::env::{FourRoomsConfig, FourRoomsEnv, Room};
use crate::math::logit;
use crate::{Error, Result};

use super::{IntraPolicy, OptionSet, TERMINATION_LOGIT_CLAMP};

pub const HALLWAY_OFF_TARGET_TERMINATION: f64 = 0.01;

/// Hand-designed options over the FourRooms layout: eight hallway options
/// (two per room, one per bordering hallway) followed by four one-step
/// options, one per primitive move.
///
/// Policies are relaxed to be stochastic: the preferred action gets
/// `1 - epsilon_action` and the rest share `epsilon_action` uniformly.
/// A hallway option only steers inside its room and on that room's two
/// hallways; elsewhere its policy is uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOptionSet {
    pub n_states: usize,
    pub n_actions: usize,
    /// `policies[o][s][a]`
    pub policies: Vec<Vec<Vec<f64>>>,
    /// `terminations[o][s]`
    pub terminations: Vec<Vec<f64>>,
    /// Target hallway of each hallway option; `None` for primitive options.
    pub targets: Vec<Option<usize>>,
    /// Room each hallway option is defined for.
    pub rooms: Vec<Option<Room>>,
}

pub fn hallway_options(epsilon_action: f64) -> Result<FixedOptionSet> {
    let env = FourRoomsEnv::new(FourRoomsConfig::default(), 0)?;
    hallway_options_with(&env, epsilon_action, HALLWAY_OFF_TARGET_TERMINATION)
}

pub fn hallway_options_with(
    env: &FourRoomsEnv,
    epsilon_action: f64,
    off_target_termination: f64,
) -> Result<FixedOptionSet> {
    if !(epsilon_action > 0.0 && epsilon_action < 1.0) {
        return Err(Error::OutOfRange { name: "epsilon_action", value: epsilon_action, expected: "(0, 1)" });
    }
    if !(off_target_termination > 0.0 && off_target_termination < 1.0) {
        return Err(Error::OutOfRange {
            name: "off_target_termination",
            value: off_target_termination,
            expected: "(0, 1)",
        });
    }
    let n = env.n_states();
    let relaxed = |preferred: usize| {
        let mut p = vec![epsilon_action / 3.0; 4];
        p[preferred] = 1.0 - epsilon_action;
        p
    };

    let mut set = FixedOptionSet {
        n_states: n,
        n_actions: 4,
        policies: Vec::new(),
        terminations: Vec::new(),
        targets: Vec::new(),
        rooms: Vec::new(),
    };
    for room in Room::ALL {
        let home_hallways = env.room_hallways(room);
        for target in home_hallways {
            let dist = env.distances_to(target);
            let policy = (0..n)
                .map(|s| {
                    if s == target {
                        return vec![0.25; 4];
                    }
                    // outside the room it was built for the option has no preference
                    if env.room_of(s) != Some(room) && !home_hallways.contains(&s) {
                        return vec![0.25; 4];
                    }
                    // first move that strictly shortens the path
                    let best = (0..4)
                        .find(|&a| dist[env.neighbor(s, a)] + 1 == dist[s])
                        .expect("every cell has a shortest-path move");
                    relaxed(best)
                })
                .collect();
            let termination = (0..n)
                .map(|s| if s == target { 1.0 } else { off_target_termination })
                .collect();
            set.policies.push(policy);
            set.terminations.push(termination);
            set.targets.push(Some(target));
            set.rooms.push(Some(room));
        }
    }
    for a in 0..4 {
        set.policies.push(vec![relaxed(a); n]);
        set.terminations.push(vec![1.0; n]);
        set.targets.push(None);
        set.rooms.push(None);
    }
    Ok(set)
}

impl FixedOptionSet {
    pub fn n_options(&self) -> usize {
        self.policies.len()
    }

    /// Encodes the tables as a one-hot linear [`OptionSet`] (ζ = ln π,
    /// ν = logit β) with option values at zero and only θ learnable.
    /// A termination of exactly 1 maps to the largest allowed logit.
    pub fn to_option_set(&self, tau: f64, epsilon_mu: f64) -> Result<OptionSet> {
        let (n_options, n_actions, dim) = (self.n_options(), self.n_actions, self.n_states);
        let mut set = OptionSet::linear(n_options, n_actions, dim, tau, epsilon_mu)?;
        let mut zeta = vec![0.0; n_options * n_actions * dim];
        for o in 0..n_options {
            for s in 0..dim {
                for a in 0..n_actions {
                    zeta[(o * n_actions + a) * dim + s] = self.policies[o][s][a].ln();
                }
                set.termination[o * dim + s] = if self.terminations[o][s] >= 1.0 {
                    TERMINATION_LOGIT_CLAMP
                } else {
                    logit(self.terminations[o][s])
                };
            }
        }
        set.policy = IntraPolicy::Linear(zeta);
        set.fixed_options = true;
        Ok(set)
    }
}
