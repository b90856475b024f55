use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::approx::FeatureVec;
use crate::env::TabularMdp;
use crate::options::OptionSet;
use crate::{Error, Result};

/// Options over a finite state space in explicit table form.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularOptions {
    pub n_states: usize,
    pub n_options: usize,
    pub n_actions: usize,
    /// `pi[o][s][a]`
    pub pi: Vec<Vec<Vec<f64>>>,
    /// `beta[o][s]`
    pub beta: Vec<Vec<f64>>,
    /// `mu[s][o]`
    pub mu: Vec<Vec<f64>>,
}

impl TabularOptions {
    /// Reads the tables off an option set with one-hot state features.
    pub fn from_option_set(set: &OptionSet) -> Result<Self> {
        let n = set.dim;
        let mut pi = vec![Vec::with_capacity(n); set.n_options];
        let mut beta = vec![Vec::with_capacity(n); set.n_options];
        let mut mu = Vec::with_capacity(n);
        for s in 0..n {
            let phi = FeatureVec::one_hot(s, n);
            for (o, row) in set.policy_table(&phi)?.into_iter().enumerate() {
                pi[o].push(row);
                beta[o].push(set.termination_prob(&phi, o));
            }
            mu.push(set.meta_policy_dist(&phi)?.0);
        }
        Ok(TabularOptions { n_states: n, n_options: set.n_options, n_actions: set.n_actions, pi, beta, mu })
    }

    /// Dirichlet(1) policies and meta-policy rows, β ~ U(0.1, 0.9).
    pub fn random<R: Rng + ?Sized>(n_states: usize, n_options: usize, n_actions: usize, rng: &mut R) -> Self {
        let pi = (0..n_options)
            .map(|_| (0..n_states).map(|_| dirichlet_row(n_actions, rng)).collect())
            .collect();
        let beta = (0..n_options)
            .map(|_| (0..n_states).map(|_| rng.random_range(0.1..0.9)).collect())
            .collect();
        let mu = (0..n_states).map(|_| dirichlet_row(n_options, rng)).collect();
        TabularOptions { n_states, n_options, n_actions, pi, beta, mu }
    }

    /// Positive meta-policy and termination strictly inside (0, 1).
    pub fn check_assumption(&self) -> Result<()> {
        for s in 0..self.n_states {
            for o in 0..self.n_options {
                let (m, b) = (self.mu[s][o], self.beta[o][s]);
                if !(m > 0.0) {
                    return Err(Error::AssumptionViolated(format!("mu({o}|{s}) = {m}")));
                }
                if !(b > 0.0 && b < 1.0) {
                    return Err(Error::AssumptionViolated(format!("beta({s},{o}) = {b}")));
                }
            }
        }
        Ok(())
    }

    /// p(o|s, prev) = β(s,prev)μ(o|s) + (1-β(s,prev))·[o = prev].
    pub fn arrival(&self, s: usize, prev: usize, o: usize) -> f64 {
        let b = self.beta[prev][s];
        b * self.mu[s][o] + if o == prev { 1.0 - b } else { 0.0 }
    }

    /// P^{π_o}(s'|s) = Σ_a π(a|s,o) P(s'|s,a).
    pub fn state_kernel(&self, mdp: &TabularMdp, o: usize, s: usize) -> Vec<f64> {
        let mut row = vec![0.0; mdp.n_states];
        for (a, &p) in self.pi[o][s].iter().enumerate() {
            for (r, &t) in row.iter_mut().zip(mdp.row(s, a)) {
                *r += p * t;
            }
        }
        row
    }
}

fn dirichlet_row<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Continuing MDP with Dirichlet(1) transition rows and U(0, 1) rewards.
pub fn random_mdp<R: Rng + ?Sized>(n_states: usize, n_actions: usize, discount: f64, rng: &mut R) -> TabularMdp {
    let transition = (0..n_states * n_actions).flat_map(|_| dirichlet_row(n_states, rng)).collect();
    let reward = (0..n_states * n_actions).map(|_| rng.random::<f64>()).collect();
    TabularMdp {
        n_states,
        n_actions,
        transition,
        reward,
        start_dist: vec![1.0 / n_states as f64; n_states],
        terminal: vec![false; n_states],
        discount,
    }
}

/// A random MDP together with random options over it.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub mdp: TabularMdp,
    pub options: TabularOptions,
}

/// Sizes drawn uniformly from `2..=max_states`, `1..=max_options` and `2..=3` actions.
pub fn random_instance<R: Rng + ?Sized>(max_states: usize, max_options: usize, rng: &mut R) -> RandomInstance {
    let n_states = rng.random_range(2..=max_states.max(2));
    let n_options = rng.random_range(1..=max_options.max(1));
    let n_actions = rng.random_range(2..=3);
    let mdp = random_mdp(n_states, n_actions, 0.99, rng);
    let options = TabularOptions::random(n_states, n_options, n_actions, rng);
    RandomInstance { mdp, options }
}
