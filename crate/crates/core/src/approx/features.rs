use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::{Error, Result};

/// A state feature vector φ(s). One-hot vectors are stored by index so that
/// tabular updates touch a single weight per option.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureVec {
    OneHot { index: usize, dim: usize },
    Dense(Vec<f64>),
}

impl FeatureVec {
    pub fn one_hot(index: usize, dim: usize) -> Self {
        assert!(index < dim, "one-hot index {index} out of range for dim {dim}");
        FeatureVec::OneHot { index, dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureVec::OneHot { dim, .. } => *dim,
            FeatureVec::Dense(v) => v.len(),
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.dim());
        match self {
            FeatureVec::OneHot { index, .. } => weights[*index],
            FeatureVec::Dense(v) => crate::math::dot(v, weights),
        }
    }

    /// `weights += scale * φ`.
    pub fn add_scaled_to(&self, scale: f64, weights: &mut [f64]) {
        debug_assert_eq!(weights.len(), self.dim());
        match self {
            FeatureVec::OneHot { index, .. } => weights[*index] += scale,
            FeatureVec::Dense(v) => {
                for (w, x) in weights.iter_mut().zip(v) {
                    *w += scale * x;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            FeatureVec::OneHot { index, dim } => {
                let mut v = vec![0.0; *dim];
                v[*index] = 1.0;
                v
            }
            FeatureVec::Dense(v) => v.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FeatureVec::OneHot { .. } => true,
            FeatureVec::Dense(v) => v.iter().all(|x| x.is_finite()),
        }
    }

    /// φ(s,o): φ(s) placed in block `option` of an `n_options`-block vector.
    pub fn in_block(&self, option: usize, n_options: usize) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * n_options];
        self.add_scaled_to(1.0, &mut out[option * d..(option + 1) * d]);
        out
    }
}

/// Gaussian kernels in per-dimension normalised coordinates, plus a bias
/// feature in the last slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfMap {
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl RbfMap {
    pub fn n_kernels(&self) -> usize {
        self.centers.len()
    }

    pub fn normalize(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(&x, (&lo, &hi))| (x - lo) / (hi - lo))
            .collect()
    }

    pub fn features(&self, point: &[f64]) -> Result<FeatureVec> {
        if point.len() != self.low.len() {
            return Err(Error::DimensionMismatch {
                context: "rbf state",
                expected: self.low.len(),
                got: point.len(),
            });
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("rbf state"));
        }
        let z = self.normalize(point);
        let mut out = Vec::with_capacity(self.n_kernels() + 1);
        for (c, &w) in self.centers.iter().zip(&self.widths) {
            let d2: f64 = c.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
            out.push((-w * d2).exp());
        }
        out.push(1.0);
        Ok(FeatureVec::Dense(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    OneHot { n_states: usize },
    Rbf(RbfMap),
}

impl FeatureMap {
    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::OneHot { n_states } => *n_states,
            FeatureMap::Rbf(m) => m.n_kernels() + 1,
        }
    }

    pub fn tabular(&self, state: usize) -> FeatureVec {
        match self {
            FeatureMap::OneHot { n_states } => FeatureVec::one_hot(state, *n_states),
            FeatureMap::Rbf(_) => panic!("tabular features requested from an RBF map"),
        }
    }

    pub fn continuous(&self, point: &[f64]) -> Result<FeatureVec> {
        match self {
            FeatureMap::Rbf(m) => m.features(point),
            FeatureMap::OneHot { .. } => Err(Error::InvalidConfig(
                "continuous features requested from a one-hot map".into(),
            )),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Collects `n_samples` states by uniform random actions (resetting on
/// termination or at the step cap), normalises each dimension to `[0, 1]` and
/// places `kernels_per_radius` centres per radius by subsampling the
/// collected states. Kernel `i` has width `1 / (2 radius_i^2)`.
pub fn rbf_fit<E: Environment, R: Rng + ?Sized>(
    env: &E,
    n_samples: usize,
    radii: &[f64],
    kernels_per_radius: usize,
    rng: &mut R,
) -> Result<(RbfMap, Vec<Vec<f64>>)> {
    if n_samples < 1000 {
        return Err(Error::OutOfRange { name: "n_samples", value: n_samples as f64, expected: ">= 1000" });
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidConfig("radii must be a nonempty list of positive values".into()));
    }
    if kernels_per_radius == 0 || kernels_per_radius > n_samples {
        return Err(Error::OutOfRange {
            name: "kernels_per_radius",
            value: kernels_per_radius as f64,
            expected: "1..=n_samples",
        });
    }

    let mut samples = Vec::with_capacity(n_samples);
    let mut state = env.reset(rng);
    let mut t = 0;
    let mut attempts = 0;
    while samples.len() < n_samples {
        attempts += 1;
        if attempts > 10 * n_samples {
            return Err(Error::InsufficientSamples { collected: samples.len(), requested: n_samples });
        }
        samples.push(env.observe(&state));
        let a = rng.random_range(0..env.n_actions());
        let out = env.step(&state, a, rng)?;
        t += 1;
        if out.done || t >= env.max_episode_steps() {
            state = env.reset(rng);
            t = 0;
        } else {
            state = out.next_state;
        }
    }

    let dims = samples[0].len();
    let mut low = vec![f64::INFINITY; dims];
    let mut high = vec![f64::NEG_INFINITY; dims];
    for s in &samples {
        for d in 0..dims {
            low[d] = low[d].min(s[d]);
            high[d] = high[d].max(s[d]);
        }
    }
    for d in 0..dims {
        if high[d] - low[d] <= 0.0 {
            high[d] = low[d] + 1.0;
        }
    }
    let mut map = RbfMap { centers: Vec::new(), widths: Vec::new(), low, high };
    for &radius in radii {
        for i in sample(rng, n_samples, kernels_per_radius) {
            map.centers.push(map.normalize(&samples[i]));
            map.widths.push(1.0 / (2.0 * radius * radius));
        }
    }
    Ok((map, samples))
}
