use serde::Serialize;

use crate::{Error, Result};

/// Gradient magnitudes below this are compared on an absolute scale, so that
/// round-off in near-zero coordinates does not register as relative error.
pub const MAGNITUDE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub n_params: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Coordinate with the largest relative error.
    pub worst_index: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares `analytic` against central differences of `f` at `params`.
///
/// The relative error of coordinate `i` is
/// `|g_i - n_i| / max(|g_i|, |n_i|, MAGNITUDE_FLOOR)`.
pub fn finite_diff_check<F>(
    f: F,
    analytic: &[f64],
    params: &[f64],
    perturbation: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&[f64]) -> f64,
{
    if !(perturbation > 0.0) {
        return Err(Error::OutOfRange { name: "perturbation", value: perturbation, expected: "> 0" });
    }
    if analytic.len() != params.len() {
        return Err(Error::DimensionMismatch {
            context: "analytic gradient",
            expected: params.len(),
            got: analytic.len(),
        });
    }
    let mut x = params.to_vec();
    let mut report = GradCheckReport {
        n_params: params.len(),
        max_abs_error: 0.0,
        max_rel_error: 0.0,
        worst_index: 0,
        tolerance,
        passed: true,
    };
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + perturbation;
        let plus = f(&x);
        x[i] = orig - perturbation;
        let minus = f(&x);
        x[i] = orig;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NonFinite("finite-difference objective"));
        }
        let numeric = (plus - minus) / (2.0 * perturbation);
        let abs = (analytic[i] - numeric).abs();
        let rel = abs / analytic[i].abs().max(numeric.abs()).max(MAGNITUDE_FLOOR);
        report.max_abs_error = report.max_abs_error.max(abs);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    report.passed = report.max_rel_error < tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v + 0.5 * v).sum()
    }

    fn quadratic_grad(x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| 2.0 * (i as f64 + 1.0) * v + 0.5).collect()
    }

    #[test]
    fn quadratic_is_exact_up_to_round_off() {
        let x = [0.3, -1.2, 2.5, 0.0];
        let r = finite_diff_check(quadratic, &quadratic_grad(&x), &x, 1e-5, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_rel_error < 1e-8);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let x = [0.3, -1.2, 2.5];
        let mut g = quadratic_grad(&x);
        g[1] *= 1.01;
        let r = finite_diff_check(quadratic, &g, &x, 1e-5, 1e-5).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(finite_diff_check(quadratic, &[0.0], &[0.0], 0.0, 1e-5).is_err());
        assert!(finite_diff_check(|_| f64::NAN, &[0.0], &[0.0], 1e-5, 1e-5).is_err());
    }
}
