//! The verification suite: exact and Monte Carlo oracles that need no
//! training runs.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use moc_core::analysis::{
    build_augmented_chain, expected_a_check, is_unbiasedness_check, one_hot_features, random_instance, random_mdp,
    stationary_distribution, verify_decomposition, RandomInstance, RatioMode,
};
use moc_core::approx::{finite_diff_check, FeatureVec, GradCheckReport, TwoLayerActor};
use moc_core::env::{FourRoomsConfig, FourRoomsEnv};
use moc_core::learning::{run_episode, Algorithm, IsTargetForm, LearnerConfig};
use moc_core::options::{IntraPolicy, OptionSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::Result;

pub const DECOMPOSITION_TOL: f64 = 1e-8;
pub const A_MATRIX_TOL: f64 = 1e-12;
pub const Z_LIMIT: f64 = 3.0;
pub const GRADIENT_TOL: f64 = 1e-5;
const STATIONARY_TOL: f64 = 1e-14;
const GRADIENT_POINTS: usize = 100;
const GATE_EPISODES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Small,
    Full,
}

impl Scale {
    fn instances(self) -> (usize, usize) {
        match self {
            Scale::Small => (5, 8),
            Scale::Full => (20, 20),
        }
    }

    fn is_samples(self) -> usize {
        match self {
            Scale::Small => 100_000,
            Scale::Full => 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Test fixture: perturbs the analytic policy gradient so that its check
    /// must fail.
    pub corrupt_gradient: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// The checked quantity (a residual, an eigenvalue, a z-score...).
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub scale: Scale,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

struct Outcome {
    passed: bool,
    value: f64,
    threshold: f64,
    detail: String,
}

fn timed(name: &str, check: impl FnOnce() -> Result<Outcome>) -> CheckResult {
    let start = Instant::now();
    let outcome = check().unwrap_or_else(|e| Outcome {
        passed: false,
        value: f64::NAN,
        threshold: f64::NAN,
        detail: format!("error: {e}"),
    });
    CheckResult {
        name: name.into(),
        passed: outcome.passed,
        value: outcome.value,
        threshold: outcome.threshold,
        detail: outcome.detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_verify(scale: Scale, options: VerifyOptions) -> VerifyReport {
    let start = Instant::now();
    let checks = vec![
        timed("decomposition", || decomposition(scale)),
        timed("a_matrix", || a_matrix(scale)),
        timed("is_unbiasedness", || is_unbiasedness(scale)),
        timed("gradient_policy", || gradient_policy(options.corrupt_gradient)),
        timed("gradient_termination", gradient_termination),
        timed("gradient_meta", gradient_meta),
        timed("gradient_actor", gradient_actor),
        timed("gate_closed_equivalence", gate_closed_equivalence),
    ];
    VerifyReport {
        scale,
        passed: checks.iter().all(|c| c.passed),
        seconds: start.elapsed().as_secs_f64(),
        checks,
    }
}

fn instances(scale: Scale) -> Vec<RandomInstance> {
    let (count, max_states) = scale.instances();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    (0..count).map(|_| random_instance(max_states, 4, &mut rng)).collect()
}

fn decomposition(scale: Scale) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let list = instances(scale);
    for RandomInstance { mdp, options } in &list {
        let chain = build_augmented_chain(mdp, options)?;
        let pair = stationary_distribution(&chain, STATIONARY_TOL)?;
        worst = worst.max(verify_decomposition(&pair, options));
    }
    Ok(Outcome {
        passed: worst < DECOMPOSITION_TOL,
        value: worst,
        threshold: DECOMPOSITION_TOL,
        detail: format!("max residual over {} instances", list.len()),
    })
}

fn a_matrix(scale: Scale) -> Result<Outcome> {
    let mut lambda = f64::INFINITY;
    let mut diff: f64 = 0.0;
    let list = instances(scale);
    for RandomInstance { mdp, options } in &list {
        let chain = build_augmented_chain(mdp, options)?;
        let pair = stationary_distribution(&chain, STATIONARY_TOL)?;
        let phi = one_hot_features(&chain);
        for gamma in [0.0, 0.5, 0.9, 0.99] {
            let check = expected_a_check(&pair, &phi, &chain, options, gamma)?;
            lambda = lambda.min(check.lambda_min);
            diff = diff.max(check.moc_max_diff);
        }
    }
    Ok(Outcome {
        passed: lambda > 0.0 && diff < A_MATRIX_TOL,
        value: lambda,
        threshold: 0.0,
        detail: format!("min eigenvalue of the symmetric part; max |A - A_moc| = {diff:e} (limit {A_MATRIX_TOL:e})"),
    })
}

/// Three states, two options, frozen random parameters, sampled targets.
fn is_unbiasedness(scale: Scale) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mdp = random_mdp(3, 2, 0.9, &mut rng);
    let mut set = OptionSet::linear(2, 2, 3, 1.0, 0.05)?;
    set.policy = IntraPolicy::Linear((0..12).map(|_| rng.random_range(-2.0..2.0)).collect());
    set.termination = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
    set.theta = (0..6).map(|_| rng.random_range(0.0..5.0)).collect();
    let config = LearnerConfig { is_target_form: IsTargetForm::Full, ..LearnerConfig::default() };
    let report = is_unbiasedness_check(&mdp, &set, &config, scale.is_samples(), RatioMode::Importance, &mut rng)?;
    Ok(Outcome {
        passed: report.max_z < Z_LIMIT,
        value: report.max_z,
        threshold: Z_LIMIT,
        detail: format!("max |mean - expectation| / SE over {} entries, {} samples each", report.entries.len(), report.n_samples),
    })
}

fn summarize(reports: &[GradCheckReport]) -> Outcome {
    let worst = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    Outcome {
        passed: reports.iter().all(|r| r.passed),
        value: worst,
        threshold: GRADIENT_TOL,
        detail: format!("max relative error at {} random points", reports.len()),
    }
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

const N_OPTIONS: usize = 3;
const N_ACTIONS: usize = 4;
const DIM: usize = 5;

fn random_point(rng: &mut ChaCha8Rng) -> Result<(OptionSet, FeatureVec, usize, usize)> {
    let mut set = OptionSet::linear(N_OPTIONS, N_ACTIONS, DIM, 1.0, 0.1)?.with_parameterized_meta();
    set.policy = IntraPolicy::Linear(random_vec(N_OPTIONS * N_ACTIONS * DIM, rng));
    set.termination = random_vec(N_OPTIONS * DIM, rng);
    set.meta = Some(random_vec(N_OPTIONS * DIM, rng));
    let phi = FeatureVec::Dense(random_vec(DIM, rng));
    Ok((set, phi, rng.random_range(0..N_OPTIONS), rng.random_range(0..N_ACTIONS)))
}

fn gradient_policy(corrupt: bool) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut reports = Vec::with_capacity(GRADIENT_POINTS);
    for _ in 0..GRADIENT_POINTS {
        let (set, phi, o, a) = random_point(&mut rng)?;
        let mut analytic = set.grad_log_policy(&phi, o, a)?;
        if corrupt {
            analytic.iter_mut().for_each(|g| *g *= 1.001);
        }
        let IntraPolicy::Linear(w) = &set.policy else { unreachable!("linear policy") };
        let f = |p: &[f64]| {
            let mut s = set.clone();
            s.policy = IntraPolicy::Linear(p.to_vec());
            s.intra_policy_dist(&phi, o).map(|d| d[a].ln()).unwrap_or(f64::NAN)
        };
        reports.push(finite_diff_check(f, &analytic, w, 1e-6, GRADIENT_TOL)?);
    }
    Ok(summarize(&reports))
}

fn gradient_termination() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut reports = Vec::with_capacity(GRADIENT_POINTS);
    for _ in 0..GRADIENT_POINTS {
        let (set, phi, o, _) = random_point(&mut rng)?;
        let mut analytic = vec![0.0; set.termination.len()];
        phi.add_scaled_to(set.termination_grad_scale(&phi, o), &mut analytic[o * DIM..(o + 1) * DIM]);
        let f = |p: &[f64]| {
            let mut s = set.clone();
            s.termination = p.to_vec();
            s.termination_prob(&phi, o)
        };
        reports.push(finite_diff_check(f, &analytic, &set.termination, 1e-6, GRADIENT_TOL)?);
    }
    Ok(summarize(&reports))
}

fn gradient_meta() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut reports = Vec::with_capacity(GRADIENT_POINTS);
    for _ in 0..GRADIENT_POINTS {
        let (set, phi, o, _) = random_point(&mut rng)?;
        let analytic = set.grad_log_meta(&phi, o)?;
        let z = set.meta.clone().expect("parameterized meta");
        let f = |p: &[f64]| {
            let mut s = set.clone();
            s.meta = Some(p.to_vec());
            s.meta_policy_dist(&phi).map(|d| d.0[o].ln()).unwrap_or(f64::NAN)
        };
        reports.push(finite_diff_check(f, &analytic, &z, 1e-6, GRADIENT_TOL)?);
    }
    Ok(summarize(&reports))
}

fn gradient_actor() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut reports = Vec::with_capacity(GRADIENT_POINTS);
    for _ in 0..GRADIENT_POINTS {
        let actor = TwoLayerActor::new(3, 8, 2, 3, &mut rng);
        let x = FeatureVec::Dense(random_vec(3, &mut rng));
        let (o, a) = (rng.random_range(0..2), rng.random_range(0..3));
        let analytic = actor.log_likelihood_grad(&x, &[(o, a, 1.0)])?;
        let f = |p: &[f64]| {
            let mut net = actor.clone();
            net.params = p.to_vec();
            net.log_prob(&x, o, a).unwrap_or(f64::NAN)
        };
        reports.push(finite_diff_check(f, &analytic, &actor.params, 1e-6, GRADIENT_TOL)?);
    }
    Ok(summarize(&reports))
}

fn digest(set: &OptionSet) -> u64 {
    let mut h = DefaultHasher::new();
    set.theta.iter().for_each(|v| v.to_bits().hash(&mut h));
    set.termination.iter().for_each(|v| v.to_bits().hash(&mut h));
    if let IntraPolicy::Linear(w) = &set.policy {
        w.iter().for_each(|v| v.to_bits().hash(&mut h));
    }
    h.finish()
}

/// MOC with η = 0 against OC from the same initial parameters and random
/// stream, compared after every update.
fn gate_closed_equivalence() -> Result<Outcome> {
    let env = FourRoomsEnv::new(FourRoomsConfig::default(), 0)?;
    let n = 104;
    let featurize = |s: &usize| Ok(FeatureVec::one_hot(*s, n));
    let mut init_rng = ChaCha8Rng::seed_from_u64(109);
    let mut init = OptionSet::linear(4, 4, n, 1.0, 0.05)?;
    init.termination = (0..4 * n).map(|_| init_rng.random_range(-1.0..1.0)).collect();
    let trace = |algorithm| -> Result<(Vec<u64>, OptionSet)> {
        let mut set = init.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(110);
        let config = LearnerConfig { algorithm, eta: 0.0, lr: 0.5, ..LearnerConfig::default() };
        let mut digests = Vec::new();
        for _ in 0..GATE_EPISODES {
            run_episode(&mut set, &env, featurize, &config, &mut rng, |s, _| digests.push(digest(s)))?;
        }
        Ok((digests, set))
    };
    let (moc_trace, moc_set) = trace(Algorithm::Moc)?;
    let (oc_trace, oc_set) = trace(Algorithm::Oc)?;
    let mismatch = moc_trace.iter().zip(&oc_trace).position(|(a, b)| a != b);
    let identical = moc_trace.len() == oc_trace.len() && mismatch.is_none() && moc_set == oc_set;
    Ok(Outcome {
        passed: identical,
        value: mismatch.map_or(0.0, |i| i as f64 + 1.0),
        threshold: 0.0,
        detail: format!(
            "{} updates over {GATE_EPISODES} episodes; value is the first differing update (0 = none)",
            moc_trace.len()
        ),
    })
}
