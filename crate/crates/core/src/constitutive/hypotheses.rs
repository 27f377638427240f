//! Sampled validation of the structural hypotheses on a constitutive law.

use super::{ConstitutiveLaw, ScalarLaw};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative slack granted to inequalities that the law may saturate.
const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub rho_min: f64,
    pub rho_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub count: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec { rho_min: 1e-6, rho_max: 1e3, theta_min: 1e-6, theta_max: 1e3, count: 256 }
    }
}

impl SamplingSpec {
    fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        let count = count.max(2);
        let (a, b) = (lo.ln(), hi.ln());
        (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
    }

    pub fn rho_samples(&self) -> Vec<f64> {
        Self::log_space(self.rho_min, self.rho_max, self.count)
    }

    pub fn theta_samples(&self) -> Vec<f64> {
        Self::log_space(self.theta_min, self.theta_max, self.count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub at: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisCheck {
    /// The inequality being checked, written out.
    pub inequality: &'static str,
    pub passed: bool,
    pub first_violation: Option<Violation>,
    /// Informational checks are reported but do not fail the law.
    pub informational: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed && !c.informational)
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match (c.passed, c.informational) {
                (true, _) => "pass",
                (false, true) => "note",
                (false, false) => "FAIL",
            };
            write!(f, "[{tag}] {}", c.inequality)?;
            if let Some(v) = &c.first_violation {
                write!(f, "  (first violation at {:e}: {:e} vs {:e})", v.at, v.lhs, v.rhs)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn scalar(inequality: &'static str, ok: bool, value: f64) -> HypothesisCheck {
    HypothesisCheck {
        inequality,
        passed: ok,
        first_violation: (!ok).then_some(Violation { at: f64::NAN, lhs: value, rhs: f64::NAN }),
        informational: false,
    }
}

/// Checks `lhs(x) <= rhs(x)` on every sample.
fn sampled<L, R>(inequality: &'static str, samples: &[f64], lhs: L, rhs: R) -> HypothesisCheck
where
    L: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    let first_violation = samples.iter().find_map(|&x| {
        let (l, r) = (lhs(x), rhs(x));
        let ok = l <= r + SLACK * l.abs().max(r.abs());
        (!ok).then_some(Violation { at: x, lhs: l, rhs: r })
    });
    HypothesisCheck { inequality, passed: first_violation.is_none(), first_violation, informational: false }
}

fn derivative(law: &ScalarLaw, x: f64) -> f64 {
    law.derivative_or_fd(x)
}

pub fn validate_hypotheses(law: &ConstitutiveLaw, spec: &SamplingSpec) -> HypothesisReport {
    let b = &law.bounds;
    let rhos = spec.rho_samples();
    let thetas = spec.theta_samples();
    let (g, a) = (law.gamma, law.alpha);
    let mut checks = vec![
        scalar("gamma > 3/2", g > 1.5, g),
        scalar("alpha > 2", a > 2.0, a),
        scalar("nu > 0", law.nu > 0.0, law.nu),
        scalar("a1 > 0, a2 > 0, a3 > 0", b.a1 > 0.0 && b.a2 > 0.0 && b.a3 > 0.0, b.a1.min(b.a2).min(b.a3)),
        scalar(
            "kappa_lo > 0, mu_lo > 0, cv_lo > 0",
            b.kappa_lo > 0.0 && b.mu_lo > 0.0 && b.cv_lo > 0.0,
            b.kappa_lo.min(b.mu_lo).min(b.cv_lo),
        ),
        scalar("p_e(0) = 0", law.p_e.eval(0.0) == 0.0, law.p_e.eval(0.0)),
        scalar("p_theta(0) = 0", law.p_theta.eval(0.0) == 0.0, law.p_theta.eval(0.0)),
        sampled("p_e'(rho) >= a1*rho^(gamma-1)", &rhos, |r| b.a1 * r.powf(g - 1.0), |r| derivative(&law.p_e, r)),
        sampled("p_theta'(rho) >= 0", &rhos, |_| 0.0, |r| derivative(&law.p_theta, r)),
        sampled("p_e(rho) <= a2*rho^gamma", &rhos, |r| law.p_e.eval(r), |r| b.a2 * r.powf(g)),
        sampled(
            "p_theta(rho) <= a3*(1 + rho^(gamma/3))",
            &rhos,
            |r| law.p_theta.eval(r),
            |r| b.a3 * (1.0 + r.powf(g / 3.0)),
        ),
        sampled(
            "kappa_lo*(1 + theta^alpha) <= kappa(theta)",
            &thetas,
            |t| b.kappa_lo * (1.0 + t.powf(a)),
            |t| law.kappa.eval(t),
        ),
        sampled(
            "kappa(theta) <= kappa_hi*(1 + theta^alpha)",
            &thetas,
            |t| law.kappa.eval(t),
            |t| b.kappa_hi * (1.0 + t.powf(a)),
        ),
        sampled("mu_lo <= mu(theta)", &thetas, |_| b.mu_lo, |t| law.mu.eval(t)),
        sampled("mu(theta) <= mu_hi", &thetas, |t| law.mu.eval(t), |_| b.mu_hi),
        sampled("0 <= lambda(theta)", &thetas, |_| 0.0, |t| law.lambda.eval(t)),
        sampled("lambda(theta) <= lambda_hi", &thetas, |t| law.lambda.eval(t), |_| b.lambda_hi),
        sampled("cv_lo <= c_v(theta)", &thetas, |_| b.cv_lo, |t| law.c_v.eval(t)),
        sampled("c_v(theta) <= cv_hi", &thetas, |t| law.c_v.eval(t), |_| b.cv_hi),
    ];
    let mut bulk = sampled(
        "2*mu(theta) + 3*lambda(theta) > 0",
        &thetas,
        |_| 0.0,
        |t| 2.0 * law.mu.eval(t) + 3.0 * law.lambda.eval(t),
    );
    bulk.informational = true;
    checks.push(bulk);
    HypothesisReport { checks }
}
