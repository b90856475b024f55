use super::*;
use crate::env::{FourRoomsConfig, FourRoomsEnv};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_option_set() -> OptionSet {
    OptionSet::linear(2, 4, 3, 1.0, 0.1).unwrap()
}

fn phi(s: usize) -> FeatureVec {
    FeatureVec::one_hot(s, 3)
}

#[test]
fn arrival_continuation_and_termination_limits() {
    let mut set = two_option_set();
    // β(s=0, o=0) pinned near 0, β(s=1, o=0) pinned near 1
    set.termination[0] = -TERMINATION_LOGIT_CLAMP;
    set.termination[1] = TERMINATION_LOGIT_CLAMP;
    let cont = set.upon_arrival_dist(&phi(0), Some(0)).unwrap();
    assert!((cont.0[0] - 1.0).abs() < 1e-6 && cont.0[1] < 1e-6);
    let term = set.upon_arrival_dist(&phi(1), Some(0)).unwrap();
    let mu = set.meta_policy_dist(&phi(1)).unwrap();
    for (p, m) in term.0.iter().zip(&mu.0) {
        assert!((p - m).abs() < 1e-6);
    }
}

#[test]
fn arrival_half_termination_uniform_mu() {
    // ν = 0 gives β = 0.5; equal Q gives uniform μ
    let set = two_option_set();
    let p = set.upon_arrival_dist(&phi(2), Some(0)).unwrap();
    assert_eq!(p.0, vec![0.75, 0.25]);
    assert_eq!(set.upon_arrival_dist(&phi(2), None).unwrap().0, vec![0.5, 0.5]);
    assert!(set.upon_arrival_dist(&phi(2), Some(2)).is_err());
}

#[test]
fn intra_policy_closed_forms() {
    let mut set = two_option_set();
    assert_eq!(set.intra_policy_dist(&phi(0), 1).unwrap(), vec![0.25; 4]);
    // logits (1, 0, 0, 0) at state 0 for option 1
    if let IntraPolicy::Linear(w) = &mut set.policy {
        w[(4) * 3] = 1.0;
    }
    let e = std::f64::consts::E;
    let expected = [e / (e + 3.0), 1.0 / (e + 3.0), 1.0 / (e + 3.0), 1.0 / (e + 3.0)];
    let got = set.intra_policy_dist(&phi(0), 1).unwrap();
    for (g, x) in got.iter().zip(expected) {
        assert!((g - x).abs() < 1e-15);
    }
    // shifting every logit leaves the distribution unchanged
    if let IntraPolicy::Linear(w) = &mut set.policy {
        for a in 0..4 {
            w[(4 + a) * 3] += 7.5;
        }
    }
    let shifted = set.intra_policy_dist(&phi(0), 1).unwrap();
    for (g, x) in shifted.iter().zip(expected) {
        assert!((g - x).abs() < 1e-15);
    }
    let bad = FeatureVec::Dense(vec![f64::NAN, 0.0, 0.0]);
    assert_eq!(set.intra_policy_dist(&bad, 0), Err(Error::NonFinite("state features")));
}

#[test]
fn termination_closed_forms() {
    let mut set = two_option_set();
    assert_eq!(set.termination_prob(&phi(0), 0), 0.5);
    set.termination[3] = 1.0; // option 1, state 0
    assert!((set.termination_prob(&phi(0), 1) - 0.731_058_578_630_004_9).abs() < 1e-15);
    set.termination[3] = 1e300;
    assert!(set.termination_prob(&phi(0), 1) < 1.0);
}

#[test]
fn meta_policy_closed_forms() {
    let mut set = two_option_set();
    assert_eq!(set.meta_policy_dist(&phi(0)).unwrap().0, vec![0.5, 0.5]);
    // Q(s=0, ·) = (1, 0)
    set.theta[0] = 1.0;
    let e = std::f64::consts::E;
    let expected = [0.9 * e / (e + 1.0) + 0.05, 0.9 / (e + 1.0) + 0.05];
    let got = set.meta_policy_dist(&phi(0)).unwrap().0;
    for (g, x) in got.iter().zip(expected) {
        assert!((g - x).abs() < 1e-15);
    }
    set.epsilon_mu = 1.0;
    assert_eq!(set.meta_policy_dist(&phi(0)).unwrap().0, vec![0.5, 0.5]);
    set.tau = 0.0;
    assert!(set.meta_policy_dist(&phi(0)).is_err());
}

#[test]
fn next_option_sampling_matches_arrival_distribution() {
    let mut set = OptionSet::linear(3, 2, 2, 0.5, 0.1).unwrap();
    set.theta = vec![0.3, 0.0, -0.2, 0.0, 0.9, 0.0];
    set.termination = vec![0.4, 0.0, -1.0, 0.0, 2.0, 0.0];
    let s = FeatureVec::one_hot(0, 2);
    let prev = 1;
    let expected = set.upon_arrival_dist(&s, Some(prev)).unwrap().0;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[set.sample_next_option(&s, prev, &mut rng).unwrap().1] += 1;
    }
    for (c, p) in counts.iter().zip(&expected) {
        let freq = *c as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} expected {p}");
    }
}

fn four_rooms() -> FourRoomsEnv {
    FourRoomsEnv::new(FourRoomsConfig::default(), 0).unwrap()
}

#[test]
fn never_terminating_options_keep_the_first_choice() {
    let env = four_rooms();
    let mut set = OptionSet::linear(4, 4, env.n_states(), 1.0, 0.05).unwrap();
    set.termination.iter_mut().for_each(|v| *v = -1e9);
    let featurize = |s: &usize| Ok(FeatureVec::one_hot(*s, 104));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut s = 0;
    let first = set.initial_option(&featurize(&s).unwrap(), &mut rng).unwrap();
    let (mut prev, mut o) = (None, first);
    for _ in 0..200 {
        let (rec, next) = call_and_return_step(&set, &env, featurize, &s, prev, o, &mut rng).unwrap();
        assert_eq!(rec.option, first);
        if rec.terminal {
            break;
        }
        assert!(!rec.terminated || rec.next_option == first);
        prev = Some(rec.option);
        o = rec.next_option;
        s = next;
    }
}

#[test]
fn always_terminating_options_redraw_from_meta() {
    let env = four_rooms();
    let mut set = OptionSet::linear(2, 4, env.n_states(), 1.0, 0.05).unwrap();
    set.termination.iter_mut().for_each(|v| *v = 1e9);
    // strongly prefer option 1 everywhere through its value
    for s in 0..104 {
        set.theta[104 + s] = 3.0;
    }
    let featurize = |s: &usize| Ok(FeatureVec::one_hot(*s, 104));
    let mu1 = set.meta_policy_dist(&featurize(&0).unwrap()).unwrap().0[1];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut s, mut prev, mut o) = (0, None, 0);
    let (mut picks, mut total) = (0, 0);
    for _ in 0..20_000 {
        let (rec, next) = call_and_return_step(&set, &env, featurize, &s, prev, o, &mut rng).unwrap();
        if rec.terminal {
            s = env.reset(&mut rng);
            prev = None;
            o = set.initial_option(&featurize(&s).unwrap(), &mut rng).unwrap();
            continue;
        }
        assert!(rec.terminated || rec.next_option == rec.option);
        total += 1;
        picks += rec.next_option;
        prev = Some(rec.option);
        o = rec.next_option;
        s = next;
    }
    let freq = picks as f64 / total as f64;
    let sigma = (mu1 * (1.0 - mu1) / total as f64).sqrt();
    assert!((freq - mu1).abs() < 4.0 * sigma, "{freq} vs {mu1}");
}

#[test]
fn stepping_does_not_touch_fixed_options() {
    let env = four_rooms();
    let set = hallway_options(0.1).unwrap().to_option_set(1.0, 0.05).unwrap();
    let before = set.clone();
    let featurize = |s: &usize| Ok(FeatureVec::one_hot(*s, 104));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut s = 3;
    let mut o = set.initial_option(&featurize(&s).unwrap(), &mut rng).unwrap();
    let mut prev = None;
    for _ in 0..100 {
        let (rec, next) = call_and_return_step(&set, &env, featurize, &s, prev, o, &mut rng).unwrap();
        if rec.terminal {
            break;
        }
        prev = Some(o);
        o = rec.next_option;
        s = next;
    }
    assert_eq!(set, before);
}

#[test]
fn json_round_trip() {
    let mut set = OptionSet::linear(2, 3, 4, 0.7, 0.05).unwrap().with_parameterized_meta();
    set.theta[3] = 0.1 + 0.2;
    set.termination[1] = -1.0 / 3.0;
    let text = set.to_json().unwrap();
    for key in ["\"zeta\"", "\"nu\"", "\"z\"", "\"theta\"", "\"tau\"", "\"epsilon_mu\""] {
        assert!(text.contains(key), "{key} missing");
    }
    assert_eq!(OptionSet::from_json(&text).unwrap(), set);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let actor = TwoLayerActor::new(4, 5, 2, 3, &mut rng);
    let net = OptionSet::linear(2, 3, 4, 1.0, 0.05).unwrap().with_network_policy(actor).unwrap();
    assert_eq!(OptionSet::from_json(&net.to_json().unwrap()).unwrap(), net);
    assert!(OptionSet::from_json(&text.replace("\"tau\"", "\"tauu\"")).is_err());
}

fn arb_set() -> impl Strategy<Value = (OptionSet, usize, usize)> {
    (1usize..5, 1usize..4, 1usize..5).prop_flat_map(|(n_options, n_actions, dim)| {
        let per = n_options * dim;
        (
            prop::collection::vec(-20.0..20.0f64, per),
            prop::collection::vec(-20.0..20.0f64, per),
            0.01..5.0f64,
            0.01..1.0f64,
            0..dim,
            0..n_options,
        )
            .prop_map(move |(theta, nu, tau, eps, s, prev)| {
                let mut set = OptionSet::linear(n_options, n_actions, dim, tau, eps).unwrap();
                set.theta = theta;
                set.termination = nu;
                (set, s, prev)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn arrival_is_a_distribution_and_meta_is_floored((set, s, prev) in arb_set()) {
        let phi = FeatureVec::one_hot(s, set.dim);
        let p = set.upon_arrival_dist(&phi, Some(prev)).unwrap();
        let total: f64 = p.0.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.0.iter().all(|&x| x >= 0.0));
        let mu = set.meta_policy_dist(&phi).unwrap();
        let floor = set.epsilon_mu / set.n_options as f64;
        prop_assert!(mu.0.iter().all(|&m| m >= floor * (1.0 - 1e-12)));
        for o in 0..set.n_options {
            let beta = set.termination_prob(&phi, o);
            prop_assert!(beta > 0.0 && beta < 1.0);
        }
    }
}
