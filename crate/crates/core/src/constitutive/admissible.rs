//! Renormalizing weights `h(θ)` and their admissibility test.
//!
//! A weight is admissible when `h(0) > 0`, `h' ≤ 0`, `h → 0` at infinity and
//! `h'' h ≥ 2 (h')²`. The last condition is what makes
//! `(θ, ξ) ↦ h(θ) ξ²` convex: its Hessian has determinant
//! `2ξ² (h''h − 2h'²)` and trace `ξ² h'' + 2h`.

use super::ConstitutiveError;

/// Upper end of the sampled range for the decay proxy.
pub const DECAY_THETA_MAX: f64 = 1e4;
/// `h(DECAY_THETA_MAX)` must fall below this for a sampled weight.
pub const DECAY_THRESHOLD: f64 = 1e-2;

const SAMPLES: usize = 512;
const CONVEXITY_SLACK: f64 = 1e-12;

pub trait WeightFunction {
    fn value(&self, theta: f64) -> f64;
    fn first(&self, theta: f64) -> f64;
    fn second(&self, theta: f64) -> f64;
}

/// `h(θ) = (1+θ)^{-ω}` with `ω ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Renormalizer {
    pub omega: f64,
}

impl Renormalizer {
    pub fn new(omega: f64) -> Result<Self, ConstitutiveError> {
        if omega > 0.0 && omega <= 1.0 {
            Ok(Renormalizer { omega })
        } else {
            Err(ConstitutiveError::Parameter(format!("renormalizer exponent omega = {omega} must lie in (0, 1]")))
        }
    }
}

impl WeightFunction for Renormalizer {
    fn value(&self, theta: f64) -> f64 {
        (1.0 + theta).powf(-self.omega)
    }
    fn first(&self, theta: f64) -> f64 {
        -self.omega * (1.0 + theta).powf(-self.omega - 1.0)
    }
    fn second(&self, theta: f64) -> f64 {
        self.omega * (self.omega + 1.0) * (1.0 + theta).powf(-self.omega - 2.0)
    }
}

impl<F, G, H> WeightFunction for (F, G, H)
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    fn value(&self, theta: f64) -> f64 {
        (self.0)(theta)
    }
    fn first(&self, theta: f64) -> f64 {
        (self.1)(theta)
    }
    fn second(&self, theta: f64) -> f64 {
        (self.2)(theta)
    }
}

pub enum AdmissibilityCandidate<'a> {
    /// Member of the `(1+θ)^{-ω}` family, decided in closed form.
    Omega(f64),
    /// Arbitrary weight, decided on samples of `[0, DECAY_THETA_MAX]`.
    Sampled(&'a dyn WeightFunction),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmissibilityCondition {
    PositiveAtZero,
    NonIncreasing,
    Decay,
    Convexity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    /// `h''h = 2(h')²` holds identically (the `ω = 1` boundary case).
    pub equality: bool,
    pub violation: Option<(f64, AdmissibilityCondition)>,
}

pub fn check_admissible(candidate: AdmissibilityCandidate<'_>) -> AdmissibilityVerdict {
    match candidate {
        AdmissibilityCandidate::Omega(omega) => {
            // h''h - 2h'^2 = ω(1-ω)(1+θ)^{-2ω-2}, h' = -ω(1+θ)^{-ω-1}
            let violation = if !(omega > 0.0) {
                Some((0.0, AdmissibilityCondition::Decay))
            } else if omega > 1.0 {
                Some((0.0, AdmissibilityCondition::Convexity))
            } else {
                None
            };
            AdmissibilityVerdict { admissible: violation.is_none(), equality: omega == 1.0, violation }
        }
        AdmissibilityCandidate::Sampled(h) => {
            let violation = first_sampled_violation(h);
            let equality = violation.is_none()
                && sample_points().all(|t| {
                    let (v, d1, d2) = (h.value(t), h.first(t), h.second(t));
                    let gap = d2 * v - 2.0 * d1 * d1;
                    gap.abs() <= CONVEXITY_SLACK * (2.0 * d1 * d1).max(f64::MIN_POSITIVE)
                });
            AdmissibilityVerdict { admissible: violation.is_none(), equality, violation }
        }
    }
}

fn sample_points() -> impl Iterator<Item = f64> {
    let (lo, hi) = (1e-6f64.ln(), DECAY_THETA_MAX.ln());
    std::iter::once(0.0).chain((0..SAMPLES).map(move |i| (lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64).exp()))
}

fn first_sampled_violation(h: &dyn WeightFunction) -> Option<(f64, AdmissibilityCondition)> {
    if !(h.value(0.0) > 0.0) {
        return Some((0.0, AdmissibilityCondition::PositiveAtZero));
    }
    for t in sample_points() {
        let (v, d1, d2) = (h.value(t), h.first(t), h.second(t));
        if d1 > 0.0 {
            return Some((t, AdmissibilityCondition::NonIncreasing));
        }
        let rhs = 2.0 * d1 * d1;
        if d2 * v < rhs - CONVEXITY_SLACK * rhs {
            return Some((t, AdmissibilityCondition::Convexity));
        }
    }
    if !(h.value(DECAY_THETA_MAX) < DECAY_THRESHOLD) {
        return Some((DECAY_THETA_MAX, AdmissibilityCondition::Decay));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_family_boundary() {
        for omega in [0.25, 0.5, 1.0] {
            let v = check_admissible(AdmissibilityCandidate::Omega(omega));
            assert!(v.admissible, "omega {omega}");
            assert_eq!(v.equality, omega == 1.0);
        }
        let v = check_admissible(AdmissibilityCandidate::Omega(1.5));
        assert!(!v.admissible);
        assert_eq!(v.violation.unwrap().1, AdmissibilityCondition::Convexity);
    }

    #[test]
    fn sampled_path_agrees_with_closed_form() {
        for omega in [0.5, 0.999, 1.0, 1.001, 1.5] {
            let h = Renormalizer { omega };
            let sampled = check_admissible(AdmissibilityCandidate::Sampled(&h));
            let closed = check_admissible(AdmissibilityCandidate::Omega(omega));
            assert_eq!(sampled.admissible, closed.admissible, "omega {omega}");
        }
        let h = Renormalizer { omega: 1.0 };
        assert!(check_admissible(AdmissibilityCandidate::Sampled(&h)).equality);
    }

    #[test]
    fn exponential_weight_is_rejected() {
        let h = (|t: f64| (-t).exp(), |t: f64| -(-t).exp(), |t: f64| (-t).exp());
        let v = check_admissible(AdmissibilityCandidate::Sampled(&h));
        assert!(!v.admissible);
        assert_eq!(v.violation, Some((0.0, AdmissibilityCondition::Convexity)));
    }

    #[test]
    fn slow_decay_fails_the_proxy() {
        // admissible shape, but h(1e4) ≈ 0.1
        let h = Renormalizer { omega: 0.25 };
        let v = check_admissible(AdmissibilityCandidate::Sampled(&h));
        assert_eq!(v.violation.map(|v| v.1), Some(AdmissibilityCondition::Decay));
    }

    #[test]
    fn increasing_weight_is_rejected() {
        let h = (|t: f64| 1.0 + t, |_t: f64| 1.0, |_t: f64| 0.0);
        let v = check_admissible(AdmissibilityCandidate::Sampled(&h));
        assert_eq!(v.violation.unwrap().1, AdmissibilityCondition::NonIncreasing);
    }
}
