//! Update rules for option evaluation and control, and the episode drivers.
//!
//! Per step the multi-updates option critic (MOC) draws a single gate
//! `g ~ Bernoulli(η)`. When the gate is open every option õ is updated,
//! weighted by the upon-arrival probability p(õ|s,ō); otherwise only the
//! executing option is updated, which is exactly option-critic (OC).

mod episode;
mod flat;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approx::FeatureVec;
use crate::options::{OptionSet, TransitionRecord};
use crate::{Error, Result};

pub use episode::{run_episode, run_episode_moc, EpisodeMetrics, RunMetrics};
pub use flat::run_flat_ac;

/// Probabilities below this in an importance ratio denominator are rejected.
pub const MIN_RATIO_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Multi-updates option critic.
    Moc,
    /// Option critic: executing option only.
    Oc,
    /// Flat actor-critic.
    Ac,
}

/// How the action ratio enters the importance-sampled target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsTargetForm {
    /// `ρ_a · (r + ρ_o · γ · Q(s',o'))`: the action ratio also weights the
    /// bootstrap, which makes the target unbiased for the option õ.
    Full,
    /// `ρ_a · r + ρ_o · γ · Q(s',o')`: each ratio weights only its own term.
    Separate,
    /// `ρ_a · (r + γ · Σ_o' p(o'|s',õ) Q(s',o'))`: [`IsTargetForm::Full`]
    /// averaged over the next option in closed form, so no option ratio.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Probability of an all-options update at a step.
    pub eta: f64,
    /// Step size shared by every component unless overridden below.
    pub lr: f64,
    pub lr_values: Option<f64>,
    pub lr_policy: Option<f64>,
    pub lr_termination: Option<f64>,
    pub lr_meta: Option<f64>,
    pub discount: f64,
    /// Transitions collected before updates are applied.
    pub n_step: usize,
    pub is_ratio_cap: Option<f64>,
    pub is_target_form: IsTargetForm,
    /// Bootstrap the control advantage of a non-executing option through its
    /// own upon-arrival distribution rather than the executing option's.
    pub control_is_correction: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            algorithm: Algorithm::Moc,
            eta: 0.3,
            lr: 0.8,
            lr_values: None,
            lr_policy: None,
            lr_termination: None,
            lr_meta: None,
            discount: 0.99,
            n_step: 1,
            is_ratio_cap: None,
            is_target_form: IsTargetForm::Expected,
            control_is_correction: true,
        }
    }
}

impl LearnerConfig {
    pub fn alpha_values(&self) -> f64 {
        self.lr_values.unwrap_or(self.lr)
    }

    pub fn alpha_policy(&self) -> f64 {
        self.lr_policy.unwrap_or(self.lr)
    }

    pub fn alpha_termination(&self) -> f64 {
        self.lr_termination.unwrap_or(self.lr)
    }

    pub fn alpha_meta(&self) -> f64 {
        self.lr_meta.unwrap_or(self.lr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::OutOfRange { name: "eta", value: self.eta, expected: "[0, 1]" });
        }
        for (name, value) in [
            ("lr_values", self.alpha_values()),
            ("lr_policy", self.alpha_policy()),
            ("lr_termination", self.alpha_termination()),
            ("lr_meta", self.alpha_meta()),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::OutOfRange { name, value, expected: "> 0" });
            }
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::OutOfRange { name: "discount", value: self.discount, expected: "[0, 1)" });
        }
        if self.n_step == 0 {
            return Err(Error::OutOfRange { name: "n_step", value: 0.0, expected: ">= 1" });
        }
        if let Some(cap) = self.is_ratio_cap {
            if !(cap > 0.0) {
                return Err(Error::OutOfRange { name: "is_ratio_cap", value: cap, expected: "> 0" });
            }
        }
        Ok(())
    }

    fn cap(&self, ratio: f64) -> f64 {
        match self.is_ratio_cap {
            Some(cap) => ratio.min(cap),
            None => ratio,
        }
    }
}

/// Draws the all-options gate. `η = 0` and `η = 1` consume no randomness.
pub fn draw_gate<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> bool {
    if eta <= 0.0 {
        false
    } else if eta >= 1.0 {
        true
    } else {
        rng.random::<f64>() < eta
    }
}

/// Quantities of one record under the current parameters, shared by the
/// per-option targets.
struct StepView {
    /// π(·|s,o) for every option.
    policies: Vec<Vec<f64>>,
    /// p(·|s,ō): the all-options weights.
    arrival: Vec<f64>,
    q_next: Vec<f64>,
    mu_next: Vec<f64>,
    beta_next: Vec<f64>,
}

impl StepView {
    fn new(set: &OptionSet, record: &TransitionRecord) -> Result<Self> {
        let policies = set.policy_table(&record.phi)?;
        let arrival = set.upon_arrival_dist(&record.phi, record.previous_option)?.0;
        let q_next = set.q_values(&record.next_phi);
        let mu_next = set.meta_policy_dist(&record.next_phi)?.0;
        let beta_next = (0..set.n_options).map(|o| set.termination_prob(&record.next_phi, o)).collect();
        Ok(StepView { policies, arrival, q_next, mu_next, beta_next })
    }

    fn v_next(&self) -> f64 {
        self.mu_next.iter().zip(&self.q_next).map(|(m, q)| m * q).sum()
    }

    /// p(o'|s', from).
    fn arrival_next(&self, from: usize, to: usize) -> f64 {
        let b = self.beta_next[from];
        b * self.mu_next[to] + if from == to { 1.0 - b } else { 0.0 }
    }

    fn is_target(&self, record: &TransitionRecord, tilde: usize, config: &LearnerConfig) -> Result<f64> {
        let (o, a) = (record.option, record.action);
        let behaviour = self.policies[o][a];
        if behaviour < MIN_RATIO_DENOMINATOR {
            return Err(Error::DegenerateRatio(behaviour));
        }
        let rho_action = config.cap(self.policies[tilde][a] / behaviour);
        if record.terminal {
            return Ok(rho_action * record.reward);
        }
        if config.is_target_form == IsTargetForm::Expected {
            return Ok(rho_action * self.q_u_target(record, tilde, config.discount));
        }
        let o_next = record.next_option;
        let continuing = self.arrival_next(o, o_next);
        if continuing < MIN_RATIO_DENOMINATOR {
            return Err(Error::DegenerateRatio(continuing));
        }
        let rho_option = config.cap(self.arrival_next(tilde, o_next) / continuing);
        let bootstrap = rho_option * config.discount * self.q_next[o_next];
        Ok(match config.is_target_form {
            IsTargetForm::Full => rho_action * (record.reward + bootstrap),
            IsTargetForm::Separate => rho_action * record.reward + bootstrap,
            IsTargetForm::Expected => unreachable!(),
        })
    }

    /// r + γ[(1-β(s',õ))Q(s',õ) + β(s',õ)V(s')].
    fn q_u_target(&self, record: &TransitionRecord, option: usize, discount: f64) -> f64 {
        if record.terminal {
            return record.reward;
        }
        let b = self.beta_next[option];
        record.reward + discount * ((1.0 - b) * self.q_next[option] + b * self.v_next())
    }
}

/// Importance-sampled target for option `tilde` from a transition generated
/// by the record's executing option.
pub fn is_target(record: &TransitionRecord, tilde: usize, set: &OptionSet, config: &LearnerConfig) -> Result<f64> {
    if tilde >= set.n_options {
        return Err(Error::InvalidOption { option: tilde, n_options: set.n_options });
    }
    StepView::new(set, record)?.is_target(record, tilde, config)
}

/// [`is_target`] for every option, sharing the per-record computations.
pub fn is_targets(record: &TransitionRecord, set: &OptionSet, config: &LearnerConfig) -> Result<Vec<f64>> {
    let view = StepView::new(set, record)?;
    (0..set.n_options).map(|tilde| view.is_target(record, tilde, config)).collect()
}

/// One-step estimate of Q_U(s,o,a) for the executing option.
pub fn q_u_target(record: &TransitionRecord, set: &OptionSet, config: &LearnerConfig) -> Result<f64> {
    Ok(StepView::new(set, record)?.q_u_target(record, record.option, config.discount))
}

/// Option-value update. With `all_options` every option õ with positive
/// arrival weight moves toward its importance-sampled target; otherwise only
/// the executing option takes an on-policy TD step. All targets are formed
/// before any weight changes.
pub fn update_values(set: &mut OptionSet, record: &TransitionRecord, config: &LearnerConfig, all_options: bool) -> Result<()> {
    let view = StepView::new(set, record)?;
    values_step(set, &view, record, config, all_options)
}

fn values_step(
    set: &mut OptionSet,
    view: &StepView,
    record: &TransitionRecord,
    config: &LearnerConfig,
    all_options: bool,
) -> Result<()> {
    let alpha = config.alpha_values();
    let mut steps = Vec::with_capacity(set.n_options);
    if all_options {
        for (tilde, &w) in view.arrival.iter().enumerate() {
            if w > 0.0 {
                let delta = view.is_target(record, tilde, config)? - set.q_value(&record.phi, tilde);
                steps.push((tilde, alpha * w * delta));
            }
        }
    } else {
        let o = record.option;
        let delta = view.is_target(record, o, config)? - set.q_value(&record.phi, o);
        steps.push((o, alpha * delta));
    }
    let dim = set.dim;
    for (o, scale) in steps {
        record.phi.add_scaled_to(scale, &mut set.theta[o * dim..(o + 1) * dim]);
    }
    Ok(())
}

/// Draws the gate and applies [`update_values`].
pub fn update_values_all_options<R: Rng + ?Sized>(
    set: &mut OptionSet,
    record: &TransitionRecord,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<()> {
    let gate = draw_gate(config.eta, rng);
    update_values(set, record, config, gate)
}

/// Intra-option policy-gradient step with advantage
/// `Q_U(s,õ,a) - Q(s,õ)`. Skipped for fixed option sets.
pub fn update_policies(set: &mut OptionSet, record: &TransitionRecord, config: &LearnerConfig, all_options: bool) -> Result<()> {
    if set.fixed_options {
        return Ok(());
    }
    let view = StepView::new(set, record)?;
    policies_step(set, &view, record, config, all_options)
}

fn policies_step(
    set: &mut OptionSet,
    view: &StepView,
    record: &TransitionRecord,
    config: &LearnerConfig,
    all_options: bool,
) -> Result<()> {
    if set.fixed_options {
        return Ok(());
    }
    let alpha = config.alpha_policy();
    let executed_target = view.q_u_target(record, record.option, config.discount);
    let mut terms = Vec::with_capacity(set.n_options);
    if all_options {
        for (tilde, &w) in view.arrival.iter().enumerate() {
            if w > 0.0 {
                let target = if config.control_is_correction {
                    view.q_u_target(record, tilde, config.discount)
                } else {
                    executed_target
                };
                let advantage = target - set.q_value(&record.phi, tilde);
                terms.push((tilde, alpha * w * advantage));
            }
        }
    } else {
        let advantage = executed_target - set.q_value(&record.phi, record.option);
        terms.push((record.option, alpha * advantage));
    }
    set.ascend_policy(&record.phi, record.action, &terms)
}

pub fn update_policies_all_options<R: Rng + ?Sized>(
    set: &mut OptionSet,
    record: &TransitionRecord,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<()> {
    let gate = draw_gate(config.eta, rng);
    update_policies(set, record, config, gate)
}

/// ν_o -= α_ν ∇β(s',o) (Q(s',o) - V(s')). Skipped at terminal s' and for
/// fixed option sets.
pub fn update_termination(set: &mut OptionSet, record: &TransitionRecord, config: &LearnerConfig) -> Result<()> {
    if set.fixed_options || record.terminal {
        return Ok(());
    }
    let o = record.option;
    let advantage = set.q_value(&record.next_phi, o) - set.state_value(&record.next_phi)?;
    let scale = -config.alpha_termination() * set.termination_grad_scale(&record.next_phi, o) * advantage;
    let dim = set.dim;
    record.next_phi.add_scaled_to(scale, &mut set.termination[o * dim..(o + 1) * dim]);
    Ok(())
}

/// z += α_z β(s',o) ∇ log μ(o'|s') (Q(s',o') - V(s')). A no-op unless the
/// meta-policy is parameterised.
pub fn update_meta_policy(set: &mut OptionSet, record: &TransitionRecord, config: &LearnerConfig) -> Result<()> {
    if set.fixed_options || record.terminal || set.meta.is_none() {
        return Ok(());
    }
    let phi = &record.next_phi;
    let beta = set.termination_prob(phi, record.option);
    let advantage = set.q_value(phi, record.next_option) - set.state_value(phi)?;
    let scale = config.alpha_meta() * beta * advantage;
    if scale == 0.0 {
        return Ok(());
    }
    let grad = set.grad_log_meta(phi, record.next_option)?;
    if let Some(z) = set.meta.as_mut() {
        for (w, g) in z.iter_mut().zip(&grad) {
            *w += scale * g;
        }
    }
    Ok(())
}

/// All updates for one record, in order: values, intra-option policies,
/// terminations, meta-policy. OC never opens the gate.
///
/// The policy, termination and meta-policy steps read the critic as it was
/// before this record's value step; otherwise the baseline would already have
/// absorbed part of the TD error and the advantage would shrink by 1 − α‖φ‖².
pub fn apply_updates<R: Rng + ?Sized>(
    set: &mut OptionSet,
    record: &TransitionRecord,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<()> {
    let gate = match config.algorithm {
        Algorithm::Moc => draw_gate(config.eta, rng),
        Algorithm::Oc | Algorithm::Ac => false,
    };
    // one view serves both steps: the policy step sees the pre-update critic
    let view = StepView::new(set, record)?;
    let before = set.theta.clone();
    values_step(set, &view, record, config, gate)?;
    let updated = std::mem::replace(&mut set.theta, before);
    let actor = policies_step(set, &view, record, config, gate)
        .and_then(|_| update_termination(set, record, config))
        .and_then(|_| update_meta_policy(set, record, config));
    set.theta = updated;
    actor
}

/// Largest |Q(s,o)| over the given states.
pub fn max_abs_value(set: &OptionSet, states: &[FeatureVec]) -> f64 {
    states
        .iter()
        .flat_map(|phi| set.q_values(phi))
        .fold(0.0, |m, q| m.max(q.abs()))
}
