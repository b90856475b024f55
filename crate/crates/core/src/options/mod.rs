//! Option components and call-and-return execution.
//!
//! An [`OptionSet`] holds, for `n_options` options over `dim`-dimensional
//! state features φ(s):
//!
//! * intra-option policies π(a|s,o): a linear softmax over `ζ_o,a · φ(s)` or a
//!   [`TwoLayerActor`] with one head per option;
//! * terminations β(s,o) = sigmoid(ν_o · φ(s)), logits clamped to ±15;
//! * the policy over options μ(o|s), either a softmax over option values at
//!   temperature τ or a softmax over `z_o · φ(s)`, in both cases mixed with
//!   `epsilon_mu` of uniform mass;
//! * linear option values Q(s,o) = θ_o · φ(s).

mod hallway;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{FeatureVec, TwoLayerActor};
use crate::env::Environment;
use crate::math::{sample_categorical, sigmoid, softmax_in_place};
use crate::{Error, Result};

pub use hallway::{hallway_options, hallway_options_with, FixedOptionSet, HALLWAY_OFF_TARGET_TERMINATION};

pub const TERMINATION_LOGIT_CLAMP: f64 = 15.0;
pub const DOCUMENT_VERSION: u32 = 1;

/// A distribution over options.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionDist(pub Vec<f64>);

impl OptionDist {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn one_hot(option: usize, n: usize) -> Self {
        let mut p = vec![0.0; n];
        p[option] = 1.0;
        OptionDist(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntraPolicy {
    /// Weights laid out `[option][action][feature]`.
    Linear(Vec<f64>),
    Network(TwoLayerActor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionSet {
    pub n_options: usize,
    pub n_actions: usize,
    pub dim: usize,
    /// ζ
    pub policy: IntraPolicy,
    /// ν, laid out `[option][feature]`.
    pub termination: Vec<f64>,
    /// z, laid out `[option][feature]`; `None` selects the softmax-over-Q meta-policy.
    pub meta: Option<Vec<f64>>,
    /// θ, laid out `[option][feature]`.
    pub theta: Vec<f64>,
    pub tau: f64,
    pub epsilon_mu: f64,
    /// Options are given; only θ is learned.
    pub fixed_options: bool,
}

/// One call-and-return step. Features stand in for the raw states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub phi: FeatureVec,
    /// Option executing before this step; `None` at the start of an episode.
    pub previous_option: Option<usize>,
    pub option: usize,
    pub action: usize,
    pub reward: f64,
    pub next_phi: FeatureVec,
    /// The next state is terminal (no bootstrapping).
    pub terminal: bool,
    /// Termination was sampled from β(s', o).
    pub terminated: bool,
    pub next_option: usize,
}

impl OptionSet {
    /// Zero-initialised linear option set with the softmax-over-Q meta-policy.
    pub fn linear(n_options: usize, n_actions: usize, dim: usize, tau: f64, epsilon_mu: f64) -> Result<Self> {
        if n_options == 0 || n_actions == 0 || dim == 0 {
            return Err(Error::InvalidConfig("option set dimensions must be positive".into()));
        }
        let set = OptionSet {
            n_options,
            n_actions,
            dim,
            policy: IntraPolicy::Linear(vec![0.0; n_options * n_actions * dim]),
            termination: vec![0.0; n_options * dim],
            meta: None,
            theta: vec![0.0; n_options * dim],
            tau,
            epsilon_mu,
            fixed_options: false,
        };
        set.validate()?;
        Ok(set)
    }

    /// Replaces the meta-policy with a zero-initialised parameterised softmax.
    pub fn with_parameterized_meta(mut self) -> Self {
        self.meta = Some(vec![0.0; self.n_options * self.dim]);
        self
    }

    pub fn with_network_policy(mut self, actor: TwoLayerActor) -> Result<Self> {
        if actor.input_dim != self.dim || actor.n_options != self.n_options || actor.n_actions != self.n_actions {
            return Err(Error::InvalidConfig("actor shape does not match the option set".into()));
        }
        self.policy = IntraPolicy::Network(actor);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::OutOfRange { name: "tau", value: self.tau, expected: "> 0" });
        }
        if !(self.epsilon_mu > 0.0 && self.epsilon_mu <= 1.0) {
            return Err(Error::OutOfRange { name: "epsilon_mu", value: self.epsilon_mu, expected: "(0, 1]" });
        }
        let check = |context, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { context, expected, got })
            }
        };
        let per_option = self.n_options * self.dim;
        check("theta", per_option, self.theta.len())?;
        check("nu", per_option, self.termination.len())?;
        if let Some(z) = &self.meta {
            check("z", per_option, z.len())?;
        }
        match &self.policy {
            IntraPolicy::Linear(w) => check("zeta", per_option * self.n_actions, w.len())?,
            IntraPolicy::Network(a) => {
                check("actor input", self.dim, a.input_dim)?;
                check("actor heads", self.n_options, a.n_options)?;
                check("actor actions", self.n_actions, a.n_actions)?;
            }
        }
        Ok(())
    }

    fn check_option(&self, option: usize) -> Result<()> {
        if option < self.n_options {
            Ok(())
        } else {
            Err(Error::InvalidOption { option, n_options: self.n_options })
        }
    }

    fn block<'a>(&self, weights: &'a [f64], option: usize) -> &'a [f64] {
        &weights[option * self.dim..(option + 1) * self.dim]
    }

    pub fn q_value(&self, phi: &FeatureVec, option: usize) -> f64 {
        phi.dot(self.block(&self.theta, option))
    }

    pub fn q_values(&self, phi: &FeatureVec) -> Vec<f64> {
        (0..self.n_options).map(|o| self.q_value(phi, o)).collect()
    }

    /// π(·|s,o).
    pub fn intra_policy_dist(&self, phi: &FeatureVec, option: usize) -> Result<Vec<f64>> {
        self.check_option(option)?;
        if !phi.is_finite() {
            return Err(Error::NonFinite("state features"));
        }
        match &self.policy {
            IntraPolicy::Linear(w) => {
                let mut logits: Vec<f64> = (0..self.n_actions)
                    .map(|a| {
                        let row = (option * self.n_actions + a) * self.dim;
                        phi.dot(&w[row..row + self.dim])
                    })
                    .collect();
                softmax_in_place(&mut logits);
                Ok(logits)
            }
            IntraPolicy::Network(actor) => {
                let trunk = actor.trunk(phi)?;
                Ok(actor.action_probs(&trunk, option))
            }
        }
    }

    /// π(·|s,o) for every option, sharing the network trunk when there is one.
    pub fn policy_table(&self, phi: &FeatureVec) -> Result<Vec<Vec<f64>>> {
        match &self.policy {
            IntraPolicy::Network(actor) => {
                let trunk = actor.trunk(phi)?;
                Ok((0..self.n_options).map(|o| actor.action_probs(&trunk, o)).collect())
            }
            IntraPolicy::Linear(_) => (0..self.n_options).map(|o| self.intra_policy_dist(phi, o)).collect(),
        }
    }

    pub fn termination_logit(&self, phi: &FeatureVec, option: usize) -> f64 {
        phi.dot(self.block(&self.termination, option))
            .clamp(-TERMINATION_LOGIT_CLAMP, TERMINATION_LOGIT_CLAMP)
    }

    /// β(s,o), always strictly inside (0, 1).
    pub fn termination_prob(&self, phi: &FeatureVec, option: usize) -> f64 {
        sigmoid(self.termination_logit(phi, option))
    }

    /// Softmax part of μ before uniform mixing.
    fn meta_softmax(&self, phi: &FeatureVec) -> Vec<f64> {
        let mut logits = match &self.meta {
            None => self.q_values(phi).into_iter().map(|q| q / self.tau).collect::<Vec<_>>(),
            Some(z) => (0..self.n_options).map(|o| phi.dot(self.block(z, o))).collect(),
        };
        softmax_in_place(&mut logits);
        logits
    }

    /// μ(·|s) = (1 - ε_μ)·softmax + ε_μ·uniform.
    pub fn meta_policy_dist(&self, phi: &FeatureVec) -> Result<OptionDist> {
        if !(self.tau > 0.0) {
            return Err(Error::OutOfRange { name: "tau", value: self.tau, expected: "> 0" });
        }
        let floor = self.epsilon_mu / self.n_options as f64;
        let mut p = self.meta_softmax(phi);
        for v in p.iter_mut() {
            *v = (1.0 - self.epsilon_mu) * *v + floor;
        }
        Ok(OptionDist(p))
    }

    /// V(s) = Σ_o μ(o|s) Q(s,o).
    pub fn state_value(&self, phi: &FeatureVec) -> Result<f64> {
        let mu = self.meta_policy_dist(phi)?;
        Ok(mu.0.iter().zip(self.q_values(phi)).map(|(m, q)| m * q).sum())
    }

    /// p(·|s', ō) = β(s',ō)·μ(·|s') + (1 - β(s',ō))·δ_ō. With no previous
    /// option (episode start) this is μ(·|s').
    pub fn upon_arrival_dist(&self, phi: &FeatureVec, previous: Option<usize>) -> Result<OptionDist> {
        let mu = self.meta_policy_dist(phi)?;
        let Some(prev) = previous else {
            return Ok(mu);
        };
        self.check_option(prev)?;
        let beta = self.termination_prob(phi, prev);
        let mut p: Vec<f64> = mu.0.iter().map(|m| beta * m).collect();
        p[prev] += 1.0 - beta;
        Ok(OptionDist(p))
    }

    /// ζ as a flat vector, in the layout of [`OptionSet::grad_log_policy`].
    pub fn policy_params_mut(&mut self) -> &mut [f64] {
        match &mut self.policy {
            IntraPolicy::Linear(w) => w,
            IntraPolicy::Network(actor) => &mut actor.params,
        }
    }

    /// ∇_ζ log π(a|s,o) as a flat vector over the linear policy weights.
    pub fn grad_log_policy(&self, phi: &FeatureVec, option: usize, action: usize) -> Result<Vec<f64>> {
        match &self.policy {
            IntraPolicy::Linear(w) => {
                let probs = self.intra_policy_dist(phi, option)?;
                let mut grad = vec![0.0; w.len()];
                for (b, p) in probs.iter().enumerate() {
                    let row = (option * self.n_actions + b) * self.dim;
                    let coef = f64::from(u8::from(b == action)) - p;
                    phi.add_scaled_to(coef, &mut grad[row..row + self.dim]);
                }
                Ok(grad)
            }
            IntraPolicy::Network(actor) => actor.log_likelihood_grad(phi, &[(option, action, 1.0)]),
        }
    }

    /// Adds `Σ_k scale_k ∇_ζ log π(action | s, option_k)` to ζ, with all
    /// gradients taken at the current parameters.
    pub fn ascend_policy(&mut self, phi: &FeatureVec, action: usize, terms: &[(usize, f64)]) -> Result<()> {
        let probs: Vec<Vec<f64>> = match &self.policy {
            IntraPolicy::Linear(_) => terms
                .iter()
                .map(|&(o, _)| self.intra_policy_dist(phi, o))
                .collect::<Result<_>>()?,
            IntraPolicy::Network(_) => Vec::new(),
        };
        let (n_actions, dim) = (self.n_actions, self.dim);
        match &mut self.policy {
            IntraPolicy::Linear(w) => {
                for (&(option, scale), probs) in terms.iter().zip(&probs) {
                    for (b, p) in probs.iter().enumerate() {
                        let coef = scale * (f64::from(u8::from(b == action)) - p);
                        let row = (option * n_actions + b) * dim;
                        phi.add_scaled_to(coef, &mut w[row..row + dim]);
                    }
                }
                Ok(())
            }
            IntraPolicy::Network(actor) => {
                let terms: Vec<_> = terms.iter().map(|&(o, s)| (o, action, s)).collect();
                actor.ascend(phi, &terms)
            }
        }
    }

    /// ∇_ν β(s,o) restricted to option `o`'s block: β(1-β)φ.
    pub fn termination_grad_scale(&self, phi: &FeatureVec, option: usize) -> f64 {
        let beta = self.termination_prob(phi, option);
        beta * (1.0 - beta)
    }

    /// ∇_z log μ(o|s), laid out like z. Errors in softmax-over-Q mode.
    pub fn grad_log_meta(&self, phi: &FeatureVec, option: usize) -> Result<Vec<f64>> {
        if self.meta.is_none() {
            return Err(Error::InvalidConfig("meta-policy is not parameterised".into()));
        }
        let sm = self.meta_softmax(phi);
        let mu = (1.0 - self.epsilon_mu) * sm[option] + self.epsilon_mu / self.n_options as f64;
        let mut grad = vec![0.0; self.n_options * self.dim];
        for k in 0..self.n_options {
            let d_softmax = sm[option] * (f64::from(u8::from(k == option)) - sm[k]);
            let coef = (1.0 - self.epsilon_mu) * d_softmax / mu;
            phi.add_scaled_to(coef, &mut grad[k * self.dim..(k + 1) * self.dim]);
        }
        Ok(grad)
    }

    pub fn initial_option<R: Rng + ?Sized>(&self, phi: &FeatureVec, rng: &mut R) -> Result<usize> {
        Ok(sample_categorical(&self.meta_policy_dist(phi)?.0, rng))
    }

    /// Samples termination of `option` at s' and, if it fires, a fresh option
    /// from μ(·|s'). Marginally the result follows `upon_arrival_dist`.
    pub fn sample_next_option<R: Rng + ?Sized>(
        &self,
        next_phi: &FeatureVec,
        option: usize,
        rng: &mut R,
    ) -> Result<(bool, usize)> {
        let beta = self.termination_prob(next_phi, option);
        if rng.random::<f64>() < beta {
            Ok((true, sample_categorical(&self.meta_policy_dist(next_phi)?.0, rng)))
        } else {
            Ok((false, option))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = OptionSetDocument {
            version: DOCUMENT_VERSION,
            n_options: self.n_options,
            n_actions: self.n_actions,
            dim: self.dim,
            zeta: self.policy.clone(),
            nu: self.termination.clone(),
            z: self.meta.clone(),
            theta: self.theta.clone(),
            tau: self.tau,
            epsilon_mu: self.epsilon_mu,
            fixed_options: self.fixed_options,
        };
        serde_json::to_string(&doc).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: OptionSetDocument = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if doc.version != DOCUMENT_VERSION {
            return Err(Error::Serialization(format!("unsupported option set version {}", doc.version)));
        }
        let set = OptionSet {
            n_options: doc.n_options,
            n_actions: doc.n_actions,
            dim: doc.dim,
            policy: doc.zeta,
            termination: doc.nu,
            meta: doc.z,
            theta: doc.theta,
            tau: doc.tau,
            epsilon_mu: doc.epsilon_mu,
            fixed_options: doc.fixed_options,
        };
        set.validate()?;
        Ok(set)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionSetDocument {
    version: u32,
    n_options: usize,
    n_actions: usize,
    dim: usize,
    zeta: IntraPolicy,
    nu: Vec<f64>,
    z: Option<Vec<f64>>,
    theta: Vec<f64>,
    tau: f64,
    epsilon_mu: f64,
    #[serde(default)]
    fixed_options: bool,
}

/// Executes one step of the option `option` from `state`.
///
/// `option` must have been drawn from p(·|s, ō) at this boundary (or from
/// μ(·|s) at the start of an episode, see [`OptionSet::initial_option`]).
/// Samples a ~ π(·|s,o), steps the environment, then samples termination
/// from β(s',o) and the next option per call-and-return. When s' is
/// terminal no termination is sampled and `next_option = option`.
pub fn call_and_return_step<E, F, R>(
    set: &OptionSet,
    env: &E,
    featurize: F,
    state: &E::State,
    previous: Option<usize>,
    option: usize,
    rng: &mut R,
) -> Result<(TransitionRecord, E::State)>
where
    E: Environment,
    F: Fn(&E::State) -> Result<FeatureVec>,
    R: Rng + ?Sized,
{
    let phi = featurize(state)?;
    let probs = set.intra_policy_dist(&phi, option)?;
    let action = sample_categorical(&probs, rng);
    let outcome = env.step(state, action, rng)?;
    let next_phi = featurize(&outcome.next_state)?;
    let (terminated, next_option) = if outcome.done {
        (false, option)
    } else {
        set.sample_next_option(&next_phi, option, rng)?
    };
    let record = TransitionRecord {
        phi,
        previous_option: previous,
        option,
        action,
        reward: outcome.reward,
        next_phi,
        terminal: outcome.done,
        terminated,
        next_option,
    };
    Ok((record, outcome.next_state))
}

#[cfg(test)]
mod tests;
