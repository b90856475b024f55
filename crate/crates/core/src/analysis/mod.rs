//! Exact numerical oracles: the state-option chain, its stationary
//! distribution and decomposition, the expected TD matrix, importance
//! sampling unbiasedness, and option diversity.

mod chain;
mod diversity;
mod stability;
mod tables;
mod unbiased;

pub use chain::{
    build_augmented_chain, build_augmented_chain_unchecked, check_irreducible, stationary_distribution,
    verify_decomposition, AugmentedChain, StationaryPair, STATIONARY_MAX_ITERATIONS,
};
pub use diversity::{information_radius, information_radius_of};
pub use stability::{expected_a_check, one_hot_features, ACheck};
pub use tables::{random_instance, random_mdp, RandomInstance, TabularOptions};
pub use unbiased::{expected_target, is_unbiasedness_check, RatioMode, TargetComparison, UnbiasednessReport};
