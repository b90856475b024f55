use crate::approx::FeatureVec;
use crate::math::entropy;
use crate::options::OptionSet;
use crate::{Error, Result};

/// Equal-weight information radius of a set of distributions: the entropy of
/// their mixture minus their mean entropy (generalized Jensen-Shannon, nats).
pub fn information_radius_of(dists: &[Vec<f64>]) -> f64 {
    let n = dists.len();
    if n == 0 {
        return 0.0;
    }
    let width = dists[0].len();
    let mut mixture = vec![0.0; width];
    for d in dists {
        for (m, p) in mixture.iter_mut().zip(d) {
            *m += p / n as f64;
        }
    }
    let mean_entropy = dists.iter().map(|d| entropy(d)).sum::<f64>() / n as f64;
    (entropy(&mixture) - mean_entropy).max(0.0)
}

/// Σ_s w(s) · radius of {π(·|s,o)}_o: diversity of the intra-option policies.
pub fn information_radius(set: &OptionSet, states: &[FeatureVec], weights: &[f64]) -> Result<f64> {
    if states.len() != weights.len() {
        return Err(Error::DimensionMismatch { context: "state weights", expected: states.len(), got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("state weights must be a distribution (sum {total})")));
    }
    let mut radius = 0.0;
    for (phi, &w) in states.iter().zip(weights) {
        if w > 0.0 {
            radius += w * information_radius_of(&set.policy_table(phi)?);
        }
    }
    Ok(radius)
}
