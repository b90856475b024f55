use rand::Rng;
use serde::Serialize;

use super::TabularOptions;
use crate::approx::FeatureVec;
use crate::env::TabularMdp;
use crate::learning::{is_targets, LearnerConfig};
use crate::math::sample_categorical;
use crate::options::{OptionSet, TransitionRecord};
use crate::{Error, Result};

/// How sampled targets treat off-policy options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioMode {
    /// The importance-sampled target.
    Importance,
    /// Both ratios forced to 1 (a deliberately biased control).
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetComparison {
    pub state: usize,
    pub previous_option: usize,
    pub option: usize,
    pub sample_mean: f64,
    pub analytic: f64,
    pub std_error: f64,
    /// |sample_mean − analytic| / std_error.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbiasednessReport {
    pub n_samples: usize,
    pub max_z: f64,
    pub entries: Vec<TargetComparison>,
}

/// E[U(õ)] = Σ_a π(a|s,õ)[r(s,a) + γ Σ_s' P(s'|s,a) Σ_o' p(o'|s',õ) Q(s',o')].
pub fn expected_target(mdp: &TabularMdp, options: &TabularOptions, q: &[Vec<f64>], s: usize, tilde: usize) -> f64 {
    let mut total = 0.0;
    for (a, &pa) in options.pi[tilde][s].iter().enumerate() {
        let mut boot = 0.0;
        for (next, &p) in mdp.row(s, a).iter().enumerate() {
            if p == 0.0 || mdp.terminal[next] {
                continue;
            }
            let cont: f64 = (0..options.n_options).map(|o| options.arrival(next, tilde, o) * q[next][o]).sum();
            boot += p * cont;
        }
        total += pa * (mdp.r(s, a) + mdp.discount * boot);
    }
    total
}

/// For each (s, ō, õ) simulates `n_samples` steps o ~ p(·|s,ō), a ~ π(·|s,o),
/// s' ~ P(·|s,a), o' ~ p(·|s',o) and compares the mean sampled target for õ
/// with its exact expectation. `set` must use one-hot state features; its
/// θ supplies Q and `config.discount` must equal the MDP's discount.
pub fn is_unbiasedness_check<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    set: &OptionSet,
    config: &LearnerConfig,
    n_samples: usize,
    mode: RatioMode,
    rng: &mut R,
) -> Result<UnbiasednessReport> {
    if set.dim != mdp.n_states || set.n_actions != mdp.n_actions {
        return Err(Error::NotTabular);
    }
    if n_samples < 2 {
        return Err(Error::InsufficientSamples { collected: n_samples, requested: 2 });
    }
    let config = LearnerConfig { discount: mdp.discount, ..config.clone() };
    let options = TabularOptions::from_option_set(set)?;
    let (ns, no) = (mdp.n_states, set.n_options);
    let q: Vec<Vec<f64>> = (0..ns).map(|s| (0..no).map(|o| set.theta[o * ns + s]).collect()).collect();
    let mut entries = Vec::with_capacity(ns * no * no);
    for s in 0..ns {
        for prev in 0..no {
            let arrival: Vec<f64> = (0..no).map(|o| options.arrival(s, prev, o)).collect();
            let mut sums = vec![0.0; no];
            let mut squares = vec![0.0; no];
            for _ in 0..n_samples {
                let o = sample_categorical(&arrival, rng);
                let a = sample_categorical(&options.pi[o][s], rng);
                let next = mdp.sample_next(s, a, rng);
                let terminal = mdp.terminal[next];
                let next_arrival: Vec<f64> = (0..no).map(|k| options.arrival(next, o, k)).collect();
                let next_option = if terminal { o } else { sample_categorical(&next_arrival, rng) };
                let record = TransitionRecord {
                    phi: FeatureVec::one_hot(s, ns),
                    previous_option: Some(prev),
                    option: o,
                    action: a,
                    reward: mdp.r(s, a),
                    next_phi: FeatureVec::one_hot(next, ns),
                    terminal,
                    terminated: next_option != o,
                    next_option,
                };
                let targets = match mode {
                    RatioMode::Importance => is_targets(&record, set, &config)?,
                    RatioMode::Ignored => {
                        let boot = if terminal { 0.0 } else { mdp.discount * q[next][next_option] };
                        vec![record.reward + boot; no]
                    }
                };
                for (k, u) in targets.into_iter().enumerate() {
                    sums[k] += u;
                    squares[k] += u * u;
                }
            }
            let n = n_samples as f64;
            for tilde in 0..no {
                let mean = sums[tilde] / n;
                let var = ((squares[tilde] - n * mean * mean) / (n - 1.0)).max(0.0);
                let std_error = (var / n).sqrt();
                let analytic = expected_target(mdp, &options, &q, s, tilde);
                let gap = (mean - analytic).abs();
                let z = if std_error > 0.0 {
                    gap / std_error
                } else if gap <= 1e-12 * analytic.abs().max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                };
                entries.push(TargetComparison {
                    state: s,
                    previous_option: prev,
                    option: tilde,
                    sample_mean: mean,
                    analytic,
                    std_error,
                    z,
                });
            }
        }
    }
    let max_z = entries.iter().map(|e| e.z).fold(0.0, f64::max);
    Ok(UnbiasednessReport { n_samples, max_z, entries })
}
