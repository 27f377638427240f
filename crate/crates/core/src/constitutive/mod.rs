//! Thermodynamic closure: pressure, internal energy, entropy, transport
//! coefficients and the renormalizer calculus.
//!
//! The pressure splits as `p(ρ, θ) = p_e(ρ) + θ p_θ(ρ)` and the specific
//! internal energy as `e(ρ, θ) = P_e(ρ) + Q(θ)` with
//!
//! ```text
//! P_e(ρ) = ∫_1^ρ p_e(ξ)/ξ² dξ      Q(θ) = ∫_0^θ c_v(ξ) dξ
//! P_θ(ρ) = ∫_1^ρ p_θ(ξ)/ξ² dξ      K(θ) = ∫_0^θ κ(ξ) dξ
//! ```
//!
//! which is what makes Maxwell's relation `∂e/∂ρ = (p - θ ∂p/∂θ)/ρ²` hold
//! identically.

mod admissible;
mod hypotheses;
mod scalar;

pub use admissible::{
    check_admissible, AdmissibilityCandidate, AdmissibilityCondition, AdmissibilityVerdict, Renormalizer,
    WeightFunction, DECAY_THETA_MAX, DECAY_THRESHOLD,
};
pub use hypotheses::{validate_hypotheses, HypothesisCheck, HypothesisReport, SamplingSpec, Violation};
pub use scalar::{integrate_relative, pow, ScalarLaw, QUADRATURE_RTOL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("{quantity} = {value} is outside the domain ({requirement})")]
    Domain { quantity: &'static str, value: f64, requirement: &'static str },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("cannot invert Q at thermal energy {energy}: {reason}")]
    Inversion { energy: f64, reason: &'static str },
}

fn require(quantity: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<(), ConstitutiveError> {
    if ok {
        Ok(())
    } else {
        Err(ConstitutiveError::Domain { quantity, value, requirement })
    }
}

/// Constants appearing in the structural hypotheses on the law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisBounds {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub lambda_hi: f64,
    pub cv_lo: f64,
    pub cv_hi: f64,
}

impl Default for HypothesisBounds {
    fn default() -> Self {
        HypothesisBounds {
            a1: 5.0 / 3.0,
            a2: 1.0,
            a3: 1.0,
            kappa_lo: 1.0,
            kappa_hi: 1.0,
            mu_lo: 1.0,
            mu_hi: 1.0,
            lambda_hi: 1.0,
            cv_lo: 1.0,
            cv_hi: 1.0,
        }
    }
}

/// The closed thermodynamic description of the fluid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstitutiveLaw {
    pub gamma: f64,
    pub alpha: f64,
    pub nu: f64,
    pub p_e: ScalarLaw,
    pub p_theta: ScalarLaw,
    pub c_v: ScalarLaw,
    pub kappa: ScalarLaw,
    pub mu: ScalarLaw,
    pub lambda: ScalarLaw,
    pub bounds: HypothesisBounds,
}

impl Default for ConstitutiveLaw {
    /// `p_e = ρ^γ`, `p_θ = ρ^{γ/3}`, `γ = 5/3`, `c_v ≡ 1`, `μ ≡ 1`, `λ ≡ 0`,
    /// `κ = 1 + θ³`, `ν = 1`.
    fn default() -> Self {
        let gamma = 5.0 / 3.0;
        let alpha = 3.0;
        ConstitutiveLaw {
            gamma,
            alpha,
            nu: 1.0,
            p_e: ScalarLaw::power(1.0, gamma),
            p_theta: ScalarLaw::power(1.0, gamma / 3.0),
            c_v: ScalarLaw::constant(1.0),
            kappa: ScalarLaw::one_plus_power(1.0, alpha),
            mu: ScalarLaw::constant(1.0),
            lambda: ScalarLaw::constant(0.0),
            bounds: HypothesisBounds::default(),
        }
    }
}

/// `Q`, `K` and, when a renormalizer is supplied, `Q_h`, `K_h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalIntegrals {
    pub q: f64,
    pub k: f64,
    pub q_h: Option<f64>,
    pub k_h: Option<f64>,
}

impl ConstitutiveLaw {
    /// Rescales the transport coefficients `μ, λ, κ, ν` and the matching
    /// bounds by `factor`.
    pub fn with_transport_scale(mut self, factor: f64) -> Self {
        let scale = |law: ScalarLaw| ScalarLaw::Sum { terms: vec![law] }.scaled(factor);
        self.mu = scale(self.mu);
        self.lambda = scale(self.lambda);
        self.kappa = scale(self.kappa);
        self.nu *= factor;
        let b = &mut self.bounds;
        b.mu_lo *= factor;
        b.mu_hi *= factor;
        b.lambda_hi *= factor;
        b.kappa_lo *= factor;
        b.kappa_hi *= factor;
        self
    }

    pub fn check_structure(&self) -> Result<(), ConstitutiveError> {
        for (name, law) in [
            ("p_e", &self.p_e),
            ("p_theta", &self.p_theta),
            ("c_v", &self.c_v),
            ("kappa", &self.kappa),
            ("mu", &self.mu),
            ("lambda", &self.lambda),
        ] {
            law.check().map_err(|e| ConstitutiveError::Parameter(format!("{name}: {e}")))?;
        }
        Ok(())
    }

    pub fn pressure(&self, rho: f64, theta: f64) -> Result<f64, ConstitutiveError> {
        require("rho", rho, rho >= 0.0, "rho >= 0")?;
        require("theta", theta, theta >= 0.0, "theta >= 0")?;
        Ok(self.pressure_unchecked(rho, theta))
    }

    #[inline]
    pub fn pressure_unchecked(&self, rho: f64, theta: f64) -> f64 {
        self.p_e.eval(rho) + theta * self.p_theta.eval(rho)
    }

    /// `(P_e(ρ), P_θ(ρ))`
    pub fn potentials(&self, rho: f64) -> Result<(f64, f64), ConstitutiveError> {
        require("rho", rho, rho > 0.0, "rho > 0")?;
        Ok((self.elastic_potential(rho), self.thermal_potential(rho)))
    }

    #[inline]
    pub fn elastic_potential(&self, rho: f64) -> f64 {
        self.p_e.integral_over_square(1.0, rho)
    }

    #[inline]
    pub fn thermal_potential(&self, rho: f64) -> f64 {
        self.p_theta.integral_over_square(1.0, rho)
    }

    /// `ρ P_e(ρ)`, continuous at `ρ = 0` where it vanishes.
    pub fn elastic_energy_density(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            0.0
        } else {
            rho * self.elastic_potential(rho)
        }
    }

    /// `Q(θ)`
    #[inline]
    pub fn q(&self, theta: f64) -> f64 {
        match self.c_v.as_constant() {
            Some(c) => c * theta,
            None => self.c_v.integral(0.0, theta),
        }
    }

    /// `K(θ)`
    #[inline]
    pub fn k(&self, theta: f64) -> f64 {
        self.kappa.integral(0.0, theta)
    }

    /// `Q_h(θ)` for the power-family renormalizer of exponent `omega`.
    pub fn q_h(&self, omega: f64, theta: f64) -> f64 {
        self.c_v.integral_weighted(omega, 0.0, theta)
    }

    /// `K_h(θ)` for the power-family renormalizer of exponent `omega`.
    pub fn k_h(&self, omega: f64, theta: f64) -> f64 {
        self.kappa.integral_weighted(omega, 0.0, theta)
    }

    pub fn thermal_calculus(
        &self,
        h: Option<&Renormalizer>,
        theta: f64,
    ) -> Result<ThermalIntegrals, ConstitutiveError> {
        require("theta", theta, theta >= 0.0, "theta >= 0")?;
        Ok(ThermalIntegrals {
            q: self.q(theta),
            k: self.k(theta),
            q_h: h.map(|h| self.q_h(h.omega, theta)),
            k_h: h.map(|h| self.k_h(h.omega, theta)),
        })
    }

    /// Inverse of `Q`: the temperature carrying specific thermal energy `energy`.
    pub fn q_inverse(&self, energy: f64) -> Result<f64, ConstitutiveError> {
        if !energy.is_finite() {
            return Err(ConstitutiveError::Inversion { energy, reason: "non-finite energy" });
        }
        if let Some(c) = self.c_v.as_constant() {
            return Ok(energy / c);
        }
        if energy < 0.0 {
            return Err(ConstitutiveError::Inversion { energy, reason: "negative energy cannot be bracketed" });
        }
        let mut hi = 1.0;
        while self.q(hi) < energy {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(ConstitutiveError::Inversion { energy, reason: "no upper bracket" });
            }
        }
        let mut lo = 0.0;
        // Q is strictly increasing since c_v is bounded below.
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if self.q(mid) < energy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `s(ρ, θ) = ∫_1^θ c_v(ξ)/ξ dξ - P_θ(ρ)`
    pub fn entropy(&self, rho: f64, theta: f64) -> Result<f64, ConstitutiveError> {
        require("rho", rho, rho > 0.0, "rho > 0")?;
        require("theta", theta, theta > 0.0, "theta > 0")?;
        Ok(self.entropy_unchecked(rho, theta))
    }

    #[inline]
    pub fn entropy_unchecked(&self, rho: f64, theta: f64) -> f64 {
        self.thermal_entropy(theta) - self.thermal_potential(rho)
    }

    /// `∫_1^θ c_v(ξ)/ξ dξ`
    #[inline]
    pub fn thermal_entropy(&self, theta: f64) -> f64 {
        match self.c_v.as_constant() {
            Some(c) => c * theta.ln(),
            None => self.c_v.integral_over_x(1.0, theta),
        }
    }

    /// `e(ρ, θ) = P_e(ρ) + Q(θ)`
    pub fn internal_energy(&self, rho: f64, theta: f64) -> Result<f64, ConstitutiveError> {
        require("rho", rho, rho > 0.0, "rho > 0")?;
        require("theta", theta, theta >= 0.0, "theta >= 0")?;
        Ok(self.elastic_potential(rho) + self.q(theta))
    }

    /// Largest value of a coefficient law over a set of temperatures.
    pub fn max_over<'a>(law: &ScalarLaw, thetas: impl IntoIterator<Item = &'a f64>) -> f64 {
        thetas.into_iter().map(|t| law.eval(*t)).fold(f64::NEG_INFINITY, f64::max)
    }
}

impl ScalarLaw {
    fn scaled(self, factor: f64) -> ScalarLaw {
        match self {
            ScalarLaw::Constant { value } => ScalarLaw::Constant { value: value * factor },
            ScalarLaw::Power { coeff, exponent } => ScalarLaw::Power { coeff: coeff * factor, exponent },
            ScalarLaw::Affine { intercept, slope } => {
                ScalarLaw::Affine { intercept: intercept * factor, slope: slope * factor }
            }
            ScalarLaw::Tabulated { x, y } => ScalarLaw::Tabulated { x, y: y.into_iter().map(|v| v * factor).collect() },
            ScalarLaw::Sum { terms } => {
                let mut terms: Vec<_> = terms.into_iter().map(|t| t.scaled(factor)).collect();
                if terms.len() == 1 {
                    terms.pop().unwrap()
                } else {
                    ScalarLaw::Sum { terms }
                }
            }
        }
    }
}

/// `T_k(ρ) = min(ρ, k)`
pub fn cutoff(rho: f64, k: f64) -> Result<f64, ConstitutiveError> {
    if !(k >= 1.0) {
        return Err(ConstitutiveError::Parameter(format!("cut-off level k = {k} must be >= 1")));
    }
    require("rho", rho, rho >= 0.0, "rho >= 0")?;
    Ok(rho.min(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn pressure_examples() {
        let law = ConstitutiveLaw::default();
        assert_eq!(law.pressure(0.0, 5.0).unwrap(), 0.0);
        assert_eq!(law.pressure(1.0, 0.0).unwrap(), 1.0);
        // 2^{5/3} + 2^{5/9}, evaluated with 30-digit arithmetic
        assert_relative_eq!(law.pressure(2.0, 1.0).unwrap(), 4.644_536_596_211_998, max_relative = 1e-14);
    }

    #[test]
    fn pressure_rejects_negative_inputs() {
        let law = ConstitutiveLaw::default();
        match law.pressure(-1.0, 1.0) {
            Err(ConstitutiveError::Domain { quantity: "rho", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match law.pressure(1.0, -0.5) {
            Err(ConstitutiveError::Domain { quantity: "theta", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn potential_examples() {
        let law = ConstitutiveLaw::default();
        let (pe1, pt1) = law.potentials(1.0).unwrap();
        assert_eq!(pe1, 0.0);
        assert_eq!(pt1, 0.0);
        assert_relative_eq!(law.potentials(8.0).unwrap().0, 4.5, max_relative = 1e-14);
        assert!(law.potentials(0.0).is_err());
    }

    #[test]
    fn thermal_calculus_examples() {
        let law = ConstitutiveLaw::default();
        let h = Renormalizer::new(1.0).unwrap();
        assert_eq!(law.thermal_calculus(None, 0.0).unwrap().q, 0.0);
        let t = law.thermal_calculus(Some(&h), E - 1.0).unwrap();
        assert_relative_eq!(t.q_h.unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(law.thermal_calculus(None, 2.0).unwrap().k, 6.0, max_relative = 1e-14);
        assert!(law.thermal_calculus(None, -1e-3).is_err());
        assert!(law.thermal_calculus(None, 1.0).unwrap().q_h.is_none());
    }

    #[test]
    fn entropy_examples() {
        let law = ConstitutiveLaw::default();
        assert_eq!(law.entropy(1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(law.entropy(1.0, E).unwrap(), 1.0, max_relative = 1e-15);
        for rho in [0.1, 0.7, 3.0, 40.0] {
            assert_eq!(law.entropy(rho, 1.0).unwrap(), -law.potentials(rho).unwrap().1);
        }
        assert!(law.entropy(1.0, 0.0).is_err());
        assert!(law.entropy(0.0, 1.0).is_err());
    }

    #[test]
    fn internal_energy_examples() {
        let law = ConstitutiveLaw::default();
        assert_eq!(law.internal_energy(1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(law.internal_energy(8.0, 2.0).unwrap(), 6.5, max_relative = 1e-14);
    }

    #[test]
    fn maxwell_relation_second_order() {
        let law = ConstitutiveLaw::default();
        let (rho, theta) = (2.0, 1.0);
        let target = (law.pressure(rho, theta).unwrap() - theta * law.p_theta.eval(rho)) / (rho * rho);
        let err = |step: f64| {
            let de = (law.internal_energy(rho + step, theta).unwrap()
                - law.internal_energy(rho - step, theta).unwrap())
                / (2.0 * step);
            (de - target).abs()
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        assert!(e1 < 1e-2);
        assert_relative_eq!(e1 / e2, 4.0, max_relative = 0.05);
        assert_relative_eq!(e2 / e3, 4.0, max_relative = 0.05);
    }

    #[test]
    fn q_inverse_round_trips_general_specific_heat() {
        let law =
            ConstitutiveLaw { c_v: ScalarLaw::Affine { intercept: 1.0, slope: 0.5 }, ..ConstitutiveLaw::default() };
        for theta in [0.0, 0.3, 1.0, 7.5] {
            let back = law.q_inverse(law.q(theta)).unwrap();
            assert!((back - theta).abs() <= 1e-11 * theta.max(1.0));
        }
        assert!(law.q_inverse(-1.0).is_err());
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff(3.0, 2.0).unwrap(), 2.0);
        assert_eq!(cutoff(1.5, 2.0).unwrap(), 1.5);
        assert_eq!(cutoff(0.0, 1.0).unwrap(), 0.0);
        assert!(matches!(cutoff(1.0, 0.5), Err(ConstitutiveError::Parameter(_))));
    }

    #[test]
    fn transport_scaling_keeps_hypotheses() {
        let law = ConstitutiveLaw::default().with_transport_scale(0.1);
        assert_relative_eq!(law.kappa.eval(2.0), 0.9, max_relative = 1e-14);
        assert_relative_eq!(law.mu.eval(1.0), 0.1, max_relative = 1e-14);
        assert!(validate_hypotheses(&law, &SamplingSpec::default()).passed());
    }
}
