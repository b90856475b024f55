use rand::Rng;

use crate::math::sample_categorical;
use crate::{Error, Result};

/// Exact finite MDP. `transition` is laid out `[s][a][s']`, `reward` as `[s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Vec<f64>,
    pub reward: Vec<f64>,
    pub start_dist: Vec<f64>,
    pub terminal: Vec<bool>,
    pub discount: f64,
}

impl TabularMdp {
    pub fn p(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn r(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        sample_categorical(self.row(s, a), rng)
    }

    /// Checks shapes, row normalisation, the start distribution, the discount
    /// and that terminal states are zero-reward self-loops.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_states, self.n_actions);
        for (context, expected, got) in [
            ("transition", n * m * n, self.transition.len()),
            ("reward", n * m, self.reward.len()),
            ("start_dist", n, self.start_dist.len()),
            ("terminal", n, self.terminal.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch { context, expected, got });
            }
        }
        for s in 0..n {
            for a in 0..m {
                let row = self.row(s, a);
                if row.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::InvalidConfig(format!("negative transition entry at ({s},{a})")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "transition row ({s},{a}) sums to {total}"
                    )));
                }
                if self.terminal[s] && (row[s] != 1.0 || self.r(s, a) != 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "terminal state {s} is not a zero-reward self-loop"
                    )));
                }
            }
        }
        let total: f64 = self.start_dist.iter().sum();
        if (total - 1.0).abs() > 1e-12 || self.start_dist.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidConfig(format!("start distribution sums to {total}")));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::OutOfRange { name: "discount", value: self.discount, expected: "[0, 1)" });
        }
        Ok(())
    }
}
