//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 5 are exact or Monte Carlo checks and must pass; a failure
//! there fails the test binary. Criteria 6 to 9 compare learning curves and
//! are reported as measured. Set `ACCEPTANCE_QUICK=1` to skip them.

use std::time::Instant;

use moc_harness::config::ExperimentConfig;
use moc_harness::run::{run_all, SeedRun};
use moc_harness::sweep::final_window_score;
use moc_harness::verify::{run_verify, CheckResult, Scale, VerifyOptions};
use serde_json::{json, Value};

struct Line {
    id: u32,
    passed: Option<bool>,
    text: String,
}

fn line(id: u32, passed: bool, text: String) -> Line {
    Line { id, passed: Some(passed), text }
}

fn report(l: &Line) {
    let status = match l.passed {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "SKIP",
    };
    println!("criterion {:>2}: {status}  {}", l.id, l.text);
}

fn check<'a>(checks: &'a [CheckResult], name: &str) -> &'a CheckResult {
    checks.iter().find(|c| c.name == name).expect("check present")
}

fn property_criteria() -> Vec<Line> {
    let verify = run_verify(Scale::Full, VerifyOptions::default());
    let c = &verify.checks;
    let mut lines = Vec::new();
    let d = check(c, "decomposition");
    lines.push(line(1, d.passed && d.seconds < 30.0, format!("max residual {:.3e} < 1e-8 on 20 instances ({:.2} s)", d.value, d.seconds)));
    let a = check(c, "a_matrix");
    lines.push(line(2, a.passed && a.seconds < 30.0, format!("{} {:.3e} > 0, {} ({:.2} s)", "min eigenvalue of the symmetric part", a.value, &a.detail[a.detail.find("max").unwrap_or(0)..], a.seconds)));
    let u = check(c, "is_unbiasedness");
    lines.push(line(3, u.passed && u.seconds < 120.0, format!("max z {:.3} < 3; {} ({:.2} s)", u.value, u.detail, u.seconds)));
    let g = check(c, "gate_closed_equivalence");
    lines.push(line(4, g.passed, format!("MOC(eta = 0) and OC identical; {}", g.detail)));
    let grads: Vec<&CheckResult> = c.iter().filter(|c| c.name.starts_with("gradient_")).collect();
    let worst = grads.iter().map(|g| g.value).fold(0.0, f64::max);
    let secs: f64 = grads.iter().map(|g| g.seconds).sum();
    let names: Vec<String> = grads.iter().map(|g| format!("{} {:.2e}", &g.name["gradient_".len()..], g.value)).collect();
    lines.push(line(
        5,
        grads.len() == 4 && grads.iter().all(|g| g.passed) && secs < 60.0,
        format!("max relative error {worst:.3e} < 1e-5 at 100 points each [{}] ({secs:.2} s)", names.join(", ")),
    ));
    lines
}

fn run(doc: Value) -> Vec<SeedRun> {
    let config = ExperimentConfig::from_json(&doc.to_string()).expect("valid config");
    run_all(&config).expect("run succeeds")
}

fn four_rooms(algorithm: &str, lr: f64, eta: f64, source: &str, episodes: usize, transfer: Option<usize>) -> Value {
    json!({
        "env": {"name": "four_rooms"},
        "learner": {"algorithm": algorithm, "lr": lr, "eta": eta},
        "options": {"source": source, "n_options": 4},
        "features": {"kind": "one_hot"},
        "harness": {
            "n_seeds": 50,
            "episodes": episodes,
            "transfer_at": transfer,
            "info_radius_every": if source == "learned" { Some(100) } else { None },
            "output_dir": "unused"
        }
    })
}

/// Mean over seeds of steps at each episode.
fn mean_curve(runs: &[SeedRun]) -> Vec<f64> {
    let n = runs[0].metrics.episodes.len();
    (0..n)
        .map(|e| runs.iter().map(|r| r.metrics.episodes[e].steps as f64).sum::<f64>() / runs.len() as f64)
        .collect()
}

fn median_curve(runs: &[SeedRun]) -> Vec<f64> {
    let n = runs[0].metrics.episodes.len();
    (0..n)
        .map(|e| {
            let mut v: Vec<f64> = runs.iter().map(|r| r.metrics.episodes[e].steps as f64).collect();
            v.sort_by(f64::total_cmp);
            let m = v.len() / 2;
            if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] }
        })
        .collect()
}

/// Episodes elapsed when the trailing 10-episode mean of `curve` first
/// drops to `level`.
fn episodes_to_reach(curve: &[f64], level: f64) -> Option<usize> {
    curve.windows(10).position(|w| w.iter().sum::<f64>() / 10.0 <= level).map(|i| i + 10)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn show(n: Option<usize>) -> String {
    n.map_or("never".into(), |n| n.to_string())
}

fn criterion_6() -> Line {
    let start = Instant::now();
    let single = median_curve(&run(four_rooms("moc", 0.8, 0.0, "hallway", 500, None)));
    let multi = median_curve(&run(four_rooms("moc", 0.8, 1.0, "hallway", 500, None)));
    let (a, b) = (episodes_to_reach(&single, 100.0), episodes_to_reach(&multi, 100.0));
    let secs = start.elapsed().as_secs_f64();
    let ordered = matches!((b, a), (Some(b), Some(a)) if b < a) || (b.is_some() && a.is_none());
    line(
        6,
        ordered && secs < 600.0,
        format!(
            "hallway options, episodes until median steps <= 100: eta 1 {}, eta 0 {}; mean steps eta 1 {:.1}, eta 0 {:.1} ({secs:.0} s)",
            show(b),
            show(a),
            mean(&multi),
            mean(&single)
        ),
    )
}

fn final_radius(runs: &[SeedRun]) -> f64 {
    let last: Vec<f64> = runs
        .iter()
        .map(|r| r.metrics.episodes.iter().rev().find_map(|e| e.info_radius).expect("radius recorded"))
        .collect();
    mean(&last)
}

fn criteria_7_and_9() -> Vec<Line> {
    let start = Instant::now();
    let oc = run(four_rooms("oc", 0.8, 0.0, "learned", 1000, Some(500)));
    let moc = run(four_rooms("moc", 0.8, 0.3, "learned", 1000, Some(500)));
    let ac = run(four_rooms("ac", 0.2, 0.0, "learned", 1000, Some(500)));
    let secs = start.elapsed().as_secs_f64();
    let (oc_c, moc_c, ac_c) = (mean_curve(&oc), mean_curve(&moc), mean_curve(&ac));
    let level = mean(&oc_c[450..500]);
    let (t_oc, t_moc) = (episodes_to_reach(&oc_c[..500], level), episodes_to_reach(&moc_c[..500], level));
    let ratio = match (t_moc, t_oc) {
        (Some(m), Some(o)) => m as f64 / o as f64,
        _ => f64::INFINITY,
    };
    let after = |c: &[f64]| mean(&c[500..]);
    let beats_ac = after(&oc_c) < after(&ac_c) && after(&moc_c) < after(&ac_c);
    let seven = line(
        7,
        ratio <= 0.7 && beats_ac && secs < 1200.0,
        format!(
            "episodes to OC level {level:.1}: MOC {} vs OC {} (ratio {ratio:.3}, need <= 0.7); steps after transfer OC {:.1}, MOC {:.1}, AC {:.1} ({secs:.0} s)",
            show(t_moc),
            show(t_oc),
            after(&oc_c),
            after(&moc_c),
            after(&ac_c)
        ),
    );
    let start = Instant::now();
    let moc_full = run(four_rooms("moc", 0.8, 1.0, "learned", 1000, Some(500)));
    let (r_oc, r_moc) = (final_radius(&oc), final_radius(&moc_full));
    let nine = line(
        9,
        r_oc > r_moc,
        format!(
            "final information radius OC {r_oc:.4} > MOC(eta = 1) {r_moc:.4} over 50 seeds ({:.0} s)",
            start.elapsed().as_secs_f64()
        ),
    );
    vec![seven, nine]
}

fn criterion_8() -> Line {
    let start = Instant::now();
    let score = |eta: f64| {
        let doc = json!({
            "env": {"name": "mountain_car_sparse"},
            "learner": {"algorithm": "moc", "lr": 0.004, "eta": eta, "n_step": 5},
            "options": {"n_options": 2, "meta": "parameterized", "policy": "network"},
            "features": {"kind": "rbf"},
            "harness": {"n_seeds": 20, "timesteps": 250_000, "transfer_at": 0.5, "output_dir": "unused"}
        });
        let config = ExperimentConfig::from_json(&doc.to_string()).unwrap();
        let runs = run_all(&config).unwrap();
        let successes: usize = runs.iter().map(|r| r.metrics.episodes.iter().filter(|e| e.ret > 0.0).count()).sum();
        (final_window_score(&config, &runs).unwrap(), successes)
    };
    let (low, low_hits) = score(0.1);
    let (high, high_hits) = score(0.9);
    let secs = start.elapsed().as_secs_f64();
    line(
        8,
        high >= low && secs < 1800.0,
        format!(
            "final-window mean return eta 0.9 {high:.4} >= eta 0.1 {low:.4}; goal reached in {high_hits} and {low_hits} episodes ({secs:.0} s)"
        ),
    )
}

fn main() {
    let quick = std::env::var("ACCEPTANCE_QUICK").is_ok_and(|v| v == "1");
    let mut lines = property_criteria();
    lines.iter().for_each(report);
    let required_ok = lines.iter().all(|l| l.passed == Some(true));
    if quick {
        for id in 6..=9 {
            let l = Line { id, passed: None, text: "learning-curve criterion skipped".into() };
            report(&l);
            lines.push(l);
        }
    } else {
        let six = criterion_6();
        report(&six);
        let seven_nine = criteria_7_and_9();
        seven_nine.iter().for_each(report);
        let eight = criterion_8();
        report(&eight);
        lines.push(six);
        lines.extend(seven_nine);
        lines.push(eight);
    }
    let ten = Line { id: 10, passed: None, text: "deep-RL results are out of scope".into() };
    report(&ten);
    lines.sort_by_key(|l| l.id);
    println!("\nsummary:");
    lines.iter().for_each(report);
    if !required_ok {
        eprintln!("an exact or Monte Carlo criterion failed");
        std::process::exit(1);
    }
}
