//! Function approximation for the continuous-state experiments.

mod actor;
mod features;
mod gradcheck;

pub use actor::{actor_forward_backward, Trunk, TwoLayerActor, DEFAULT_HIDDEN};
pub use features::{rbf_fit, FeatureMap, FeatureVec, RbfMap};
pub use gradcheck::{finite_diff_check, GradCheckReport, MAGNITUDE_FLOOR};
