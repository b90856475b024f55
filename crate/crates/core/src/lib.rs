//! Options-framework building blocks and the multi-updates option critic.
//!
//! The crate is organised bottom-up:
//!
//! * [`env`]: FourRooms and sparse MountainCar, their transfer mutations and an
//!   exact tabular export.
//! * [`approx`]: feature maps (one-hot, RBF), the two-layer tanh actor and a
//!   finite-difference gradient checker.
//! * [`options`]: intra-option policies, terminations, the policy over options,
//!   option values and call-and-return execution.
//! * [`learning`]: every update rule plus episode drivers for MOC, OC and a flat
//!   actor-critic.
//! * [`analysis`]: exact oracles on small MDPs (augmented chain, stationary
//!   distribution, decomposition residual, A-matrix stability, importance
//!   sampling unbiasedness, information radius).

pub mod analysis;
pub mod approx;
pub mod env;
pub mod error;
pub mod learning;
pub mod math;
pub mod options;

pub use error::{Error, Result};
