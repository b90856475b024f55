use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FeatureVec;
use crate::math::softmax_in_place;
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 128;

/// Two-layer policy network: a shared tanh trunk and one linear softmax head
/// per option.
///
/// Parameters live in one flat vector laid out as
/// `[w1 (hidden x input) | b1 (hidden) | w2 (option x action x hidden) | b2 (option x action)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerActor {
    pub input_dim: usize,
    pub hidden: usize,
    pub n_options: usize,
    pub n_actions: usize,
    pub params: Vec<f64>,
}

/// Intermediate activations from a forward pass.
#[derive(Debug, Clone)]
pub struct Trunk {
    pub hidden: Vec<f64>,
}

impl TwoLayerActor {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        n_options: usize,
        n_actions: usize,
        rng: &mut R,
    ) -> Self {
        let mut actor = TwoLayerActor {
            input_dim,
            hidden,
            n_options,
            n_actions,
            params: vec![0.0; hidden * input_dim + hidden + n_options * n_actions * hidden + n_options * n_actions],
        };
        let in_bound = 1.0 / (input_dim as f64).sqrt();
        let out_bound = 1.0 / (hidden as f64).sqrt();
        let (w1, _, w2, _) = actor.split_mut();
        for w in w1.iter_mut() {
            *w = rng.random_range(-in_bound..in_bound);
        }
        for w in w2.iter_mut() {
            *w = rng.random_range(-out_bound..out_bound);
        }
        actor
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn offsets(&self) -> [usize; 4] {
        let w1 = self.hidden * self.input_dim;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.n_options * self.n_actions * self.hidden;
        let b2 = w2 + self.n_options * self.n_actions;
        [w1, b1, w2, b2]
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let [a, b, c, _] = self.offsets();
        let (w1, rest) = self.params.split_at(a);
        let (b1, rest) = rest.split_at(b - a);
        let (w2, b2) = rest.split_at(c - b);
        (w1, b1, w2, b2)
    }

    fn split_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        let [a, b, c, _] = self.offsets();
        let (w1, rest) = self.params.split_at_mut(a);
        let (b1, rest) = rest.split_at_mut(b - a);
        let (w2, b2) = rest.split_at_mut(c - b);
        (w1, b1, w2, b2)
    }

    fn check_input(&self, x: &FeatureVec) -> Result<()> {
        if x.dim() != self.input_dim {
            return Err(Error::DimensionMismatch { context: "actor input", expected: self.input_dim, got: x.dim() });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("actor input"));
        }
        Ok(())
    }

    pub fn trunk(&self, x: &FeatureVec) -> Result<Trunk> {
        self.check_input(x)?;
        let (w1, b1, _, _) = self.split();
        let hidden = (0..self.hidden)
            .map(|j| (x.dot(&w1[j * self.input_dim..(j + 1) * self.input_dim]) + b1[j]).tanh())
            .collect();
        Ok(Trunk { hidden })
    }

    pub fn head_logits(&self, trunk: &Trunk, option: usize) -> Vec<f64> {
        let (_, _, w2, b2) = self.split();
        (0..self.n_actions)
            .map(|a| {
                let row = (option * self.n_actions + a) * self.hidden;
                crate::math::dot(&w2[row..row + self.hidden], &trunk.hidden) + b2[option * self.n_actions + a]
            })
            .collect()
    }

    pub fn action_probs(&self, trunk: &Trunk, option: usize) -> Vec<f64> {
        let mut p = self.head_logits(trunk, option);
        softmax_in_place(&mut p);
        p
    }

    pub fn log_prob(&self, x: &FeatureVec, option: usize, action: usize) -> Result<f64> {
        let trunk = self.trunk(x)?;
        Ok(self.action_probs(&trunk, option)[action].ln())
    }

    /// Gradient of `Σ_k scale_k · log π(action_k | x, option_k)` with respect
    /// to every parameter, evaluated at the current parameters.
    pub fn log_likelihood_grad(&self, x: &FeatureVec, terms: &[(usize, usize, f64)]) -> Result<Vec<f64>> {
        let trunk = self.trunk(x)?;
        let mut grad = vec![0.0; self.n_params()];
        let [b1_at, w2_at, b2_at, _] = self.offsets();
        let (_, _, w2, _) = self.split();
        let mut d_hidden = vec![0.0; self.hidden];
        for &(option, action, scale) in terms {
            if option >= self.n_options {
                return Err(Error::InvalidOption { option, n_options: self.n_options });
            }
            if action >= self.n_actions {
                return Err(Error::InvalidAction { action, n_actions: self.n_actions });
            }
            if scale == 0.0 {
                continue;
            }
            let probs = self.action_probs(&trunk, option);
            for b in 0..self.n_actions {
                let d_logit = scale * (f64::from(u8::from(b == action)) - probs[b]);
                let row = (option * self.n_actions + b) * self.hidden;
                for j in 0..self.hidden {
                    grad[w2_at + row + j] += d_logit * trunk.hidden[j];
                    d_hidden[j] += d_logit * w2[row + j];
                }
                grad[b2_at + option * self.n_actions + b] += d_logit;
            }
        }
        for j in 0..self.hidden {
            let d_pre = d_hidden[j] * (1.0 - trunk.hidden[j] * trunk.hidden[j]);
            if d_pre == 0.0 {
                continue;
            }
            x.add_scaled_to(d_pre, &mut grad[j * self.input_dim..(j + 1) * self.input_dim]);
            grad[b1_at + j] += d_pre;
        }
        Ok(grad)
    }

    /// Adds `Σ_k scale_k · ∇ log π(action_k | x, option_k)` to the parameters.
    /// Same result as adding [`Self::log_likelihood_grad`], without
    /// materialising the full gradient.
    pub fn ascend(&mut self, x: &FeatureVec, terms: &[(usize, usize, f64)]) -> Result<()> {
        let trunk = self.trunk(x)?;
        let (n_actions, hidden) = (self.n_actions, self.hidden);
        let mut d_logits = vec![0.0; self.n_options * n_actions];
        for &(option, action, scale) in terms {
            if option >= self.n_options {
                return Err(Error::InvalidOption { option, n_options: self.n_options });
            }
            if action >= n_actions {
                return Err(Error::InvalidAction { action, n_actions });
            }
            if scale == 0.0 {
                continue;
            }
            let probs = self.action_probs(&trunk, option);
            for b in 0..n_actions {
                d_logits[option * n_actions + b] += scale * (f64::from(u8::from(b == action)) - probs[b]);
            }
        }
        let input_dim = self.input_dim;
        let (w1, b1, w2, b2) = self.split_mut();
        let mut d_hidden = vec![0.0; hidden];
        for (k, &d) in d_logits.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &mut w2[k * hidden..(k + 1) * hidden];
            for j in 0..hidden {
                d_hidden[j] += d * row[j];
                row[j] += d * trunk.hidden[j];
            }
            b2[k] += d;
        }
        for j in 0..hidden {
            let d_pre = d_hidden[j] * (1.0 - trunk.hidden[j] * trunk.hidden[j]);
            if d_pre == 0.0 {
                continue;
            }
            x.add_scaled_to(d_pre, &mut w1[j * input_dim..(j + 1) * input_dim]);
            b1[j] += d_pre;
        }
        Ok(())
    }
}

/// Forward pass for option `option` plus the gradient of
/// `scale · log π(action | features, option)` with respect to all parameters.
pub fn actor_forward_backward(
    actor: &TwoLayerActor,
    features: &FeatureVec,
    option: usize,
    action: usize,
    scale: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if option >= actor.n_options {
        return Err(Error::InvalidOption { option, n_options: actor.n_options });
    }
    let trunk = actor.trunk(features)?;
    let logits = actor.head_logits(&trunk, option);
    let grad = actor.log_likelihood_grad(features, &[(option, action, scale)])?;
    Ok((logits, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn actor() -> (TwoLayerActor, FeatureVec) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let actor = TwoLayerActor::new(5, 7, 2, 3, &mut rng);
        let x = FeatureVec::Dense((0..5).map(|_| rng.random_range(0.0..1.0)).collect());
        (actor, x)
    }

    #[test]
    fn zero_scale_gives_zero_gradient() {
        let (a, x) = actor();
        let (_, g) = actor_forward_backward(&a, &x, 1, 2, 0.0).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_is_linear_in_scale() {
        let (a, x) = actor();
        let (_, g1) = actor_forward_backward(&a, &x, 0, 1, 0.7).unwrap();
        let (_, g2) = actor_forward_backward(&a, &x, 0, 1, 1.4).unwrap();
        for (u, v) in g1.iter().zip(&g2) {
            assert!((2.0 * u - v).abs() <= 1e-15 * v.abs().max(1.0));
        }
    }

    #[test]
    fn heads_only_touch_their_own_output_weights() {
        let (a, x) = actor();
        let (_, g) = actor_forward_backward(&a, &x, 0, 1, 1.0).unwrap();
        let [_, w2_at, b2_at, _] = a.offsets();
        // option 1's output weights follow option 0's
        let head1 = w2_at + a.n_actions * a.hidden..b2_at;
        assert!(g[head1].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ascend_adds_the_gradient() {
        let (mut a, x) = actor();
        let terms = [(0, 1, 0.3), (1, 2, -0.7), (0, 1, 0.2)];
        let grad = a.log_likelihood_grad(&x, &terms).unwrap();
        let expected: Vec<f64> = a.params.iter().zip(&grad).map(|(p, g)| p + g).collect();
        a.ascend(&x, &terms).unwrap();
        for (got, want) in a.params.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (a, _) = actor();
        let bad = FeatureVec::Dense(vec![0.0; 4]);
        assert!(matches!(
            actor_forward_backward(&a, &bad, 0, 0, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
