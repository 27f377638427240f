//! Catalog of primitive scalar forms used to compose constitutive laws.
//!
//! Every coefficient of the thermodynamic closure (elastic and thermal
//! pressure, specific heat, conductivity, viscosities) is a function of a
//! single non-negative scalar. Laws are built from a fixed set of forms so
//! that scenario files stay declarative and closed-form integrals are
//! available wherever the form admits one.

use serde::{Deserialize, Serialize};

/// Relative tolerance used by the adaptive quadrature fallback.
pub const QUADRATURE_RTOL: f64 = 1e-10;

/// A scalar function of one non-negative argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarLaw {
    /// `value`
    Constant { value: f64 },
    /// `coeff * x^exponent`
    Power { coeff: f64, exponent: f64 },
    /// `intercept + slope * x`
    Affine { intercept: f64, slope: f64 },
    /// Piecewise-linear interpolation through `(x[i], y[i])`, extended
    /// linearly beyond the table ends.
    Tabulated { x: Vec<f64>, y: Vec<f64> },
    /// Sum of catalog terms.
    Sum { terms: Vec<ScalarLaw> },
}

impl ScalarLaw {
    pub fn constant(value: f64) -> Self {
        ScalarLaw::Constant { value }
    }

    pub fn power(coeff: f64, exponent: f64) -> Self {
        ScalarLaw::Power { coeff, exponent }
    }

    /// `scale * (1 + x^exponent)`, the conductivity shape.
    pub fn one_plus_power(scale: f64, exponent: f64) -> Self {
        ScalarLaw::Sum { terms: vec![ScalarLaw::constant(scale), ScalarLaw::power(scale, exponent)] }
    }

    /// Checks structural well-formedness (table ordering, finiteness).
    pub fn check(&self) -> Result<(), String> {
        match self {
            ScalarLaw::Constant { value } if !value.is_finite() => Err(format!("constant value {value} is not finite")),
            ScalarLaw::Power { coeff, exponent } if !coeff.is_finite() || !exponent.is_finite() => {
                Err(format!("power law {coeff}*x^{exponent} is not finite"))
            }
            ScalarLaw::Affine { intercept, slope } if !intercept.is_finite() || !slope.is_finite() => {
                Err(format!("affine law {intercept}+{slope}*x is not finite"))
            }
            ScalarLaw::Tabulated { x, y } => {
                if x.len() < 2 || x.len() != y.len() {
                    return Err(format!(
                        "tabulated law needs at least two points and matching lengths (got {} and {})",
                        x.len(),
                        y.len()
                    ));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err("tabulated abscissae must be strictly increasing".into());
                }
                if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
                    return Err("tabulated law contains non-finite entries".into());
                }
                Ok(())
            }
            ScalarLaw::Sum { terms } => {
                if terms.is_empty() {
                    return Err("sum law has no terms".into());
                }
                terms.iter().try_for_each(ScalarLaw::check)
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarLaw::Constant { value } => *value,
            ScalarLaw::Power { coeff, exponent } => coeff * pow(x, *exponent),
            ScalarLaw::Affine { intercept, slope } => intercept + slope * x,
            ScalarLaw::Tabulated { x: xs, y: ys } => {
                let i = segment(xs, x);
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
            ScalarLaw::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Analytic first derivative, `None` when the form has none (tables).
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            ScalarLaw::Constant { .. } => Some(0.0),
            ScalarLaw::Power { coeff, exponent } => {
                if *exponent == 0.0 {
                    Some(0.0)
                } else {
                    Some(coeff * exponent * pow(x, exponent - 1.0))
                }
            }
            ScalarLaw::Affine { slope, .. } => Some(*slope),
            ScalarLaw::Tabulated { .. } => None,
            ScalarLaw::Sum { terms } => terms.iter().map(|t| t.derivative(x)).sum(),
        }
    }

    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        match self {
            ScalarLaw::Constant { .. } | ScalarLaw::Affine { .. } => Some(0.0),
            ScalarLaw::Power { coeff, exponent } => {
                let e = *exponent;
                if e == 0.0 || e == 1.0 {
                    Some(0.0)
                } else {
                    Some(coeff * e * (e - 1.0) * pow(x, e - 2.0))
                }
            }
            ScalarLaw::Tabulated { .. } => None,
            ScalarLaw::Sum { terms } => terms.iter().map(|t| t.second_derivative(x)).sum(),
        }
    }

    /// First derivative, falling back to a central difference.
    pub fn derivative_or_fd(&self, x: f64) -> f64 {
        self.derivative(x).unwrap_or_else(|| {
            let step = 1e-6 * x.abs().max(1e-3);
            let lo = (x - step).max(0.0);
            (self.eval(x + step) - self.eval(lo)) / (x + step - lo)
        })
    }

    /// `true` when every closed-form integral below is available.
    pub fn is_analytic(&self) -> bool {
        match self {
            ScalarLaw::Tabulated { .. } => false,
            ScalarLaw::Sum { terms } => terms.iter().all(ScalarLaw::is_analytic),
            _ => true,
        }
    }

    /// The constant value when the law is a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarLaw::Constant { value } => Some(*value),
            ScalarLaw::Power { coeff, exponent } if *exponent == 0.0 => Some(*coeff),
            ScalarLaw::Affine { intercept, slope } if *slope == 0.0 => Some(*intercept),
            ScalarLaw::Sum { terms } => terms.iter().map(ScalarLaw::as_constant).sum(),
            _ => None,
        }
    }

    /// Breakpoints where the function is not smooth, used to split quadratures.
    fn kinks(&self, out: &mut Vec<f64>) {
        match self {
            ScalarLaw::Tabulated { x, .. } => out.extend_from_slice(x),
            ScalarLaw::Sum { terms } => terms.iter().for_each(|t| t.kinks(out)),
            _ => {}
        }
    }

    /// `∫_a^b f(ξ) dξ`
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.closed_integral(a, b).unwrap_or_else(|| self.quadrature(|x| self.eval(x), a, b))
    }

    /// `∫_a^b f(ξ)/ξ² dξ`, requires `a, b > 0`.
    pub fn integral_over_square(&self, a: f64, b: f64) -> f64 {
        self.closed_integral_over_square(a, b).unwrap_or_else(|| self.quadrature(|x| self.eval(x) / (x * x), a, b))
    }

    /// `∫_a^b f(ξ)/ξ dξ`, requires `a, b > 0`.
    pub fn integral_over_x(&self, a: f64, b: f64) -> f64 {
        self.closed_integral_over_x(a, b).unwrap_or_else(|| self.quadrature(|x| self.eval(x) / x, a, b))
    }

    /// `∫_a^b f(ξ) (1+ξ)^{-ω} dξ`.
    pub fn integral_weighted(&self, omega: f64, a: f64, b: f64) -> f64 {
        self.closed_integral_weighted(omega, a, b)
            .unwrap_or_else(|| self.quadrature(|x| self.eval(x) * (1.0 + x).powf(-omega), a, b))
    }

    fn closed_integral(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            ScalarLaw::Constant { value } => Some(value * (b - a)),
            ScalarLaw::Power { coeff, exponent } => {
                let e1 = exponent + 1.0;
                if e1 == 0.0 {
                    Some(coeff * (b / a).ln())
                } else {
                    Some(coeff * (b.powf(e1) - a.powf(e1)) / e1)
                }
            }
            ScalarLaw::Affine { intercept, slope } => Some(intercept * (b - a) + 0.5 * slope * (b * b - a * a)),
            ScalarLaw::Tabulated { .. } => None,
            ScalarLaw::Sum { terms } => terms.iter().map(|t| t.closed_integral(a, b)).sum(),
        }
    }

    fn closed_integral_over_square(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            ScalarLaw::Constant { value } => Some(value * (1.0 / a - 1.0 / b)),
            ScalarLaw::Power { coeff, exponent } => {
                let e = exponent - 1.0;
                if e == 0.0 {
                    Some(coeff * (b / a).ln())
                } else {
                    Some(coeff * (b.powf(e) - a.powf(e)) / e)
                }
            }
            ScalarLaw::Affine { intercept, slope } => Some(intercept * (1.0 / a - 1.0 / b) + slope * (b / a).ln()),
            ScalarLaw::Tabulated { .. } => None,
            ScalarLaw::Sum { terms } => terms.iter().map(|t| t.closed_integral_over_square(a, b)).sum(),
        }
    }

    fn closed_integral_over_x(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            ScalarLaw::Constant { value } => Some(value * (b / a).ln()),
            ScalarLaw::Power { coeff, exponent } => {
                if *exponent == 0.0 {
                    Some(coeff * (b / a).ln())
                } else {
                    Some(coeff * (b.powf(*exponent) - a.powf(*exponent)) / exponent)
                }
            }
            ScalarLaw::Affine { intercept, slope } => Some(intercept * (b / a).ln() + slope * (b - a)),
            ScalarLaw::Tabulated { .. } => None,
            ScalarLaw::Sum { terms } => terms.iter().map(|t| t.closed_integral_over_x(a, b)).sum(),
        }
    }

    fn closed_integral_weighted(&self, omega: f64, a: f64, b: f64) -> Option<f64> {
        match self {
            ScalarLaw::Constant { value } => Some(value * shifted_power_integral(0, omega, a, b)),
            ScalarLaw::Affine { intercept, slope } => Some(
                intercept * shifted_power_integral(0, omega, a, b) + slope * monomial_weighted_integral(1, omega, a, b),
            ),
            ScalarLaw::Power { coeff, exponent } => {
                let n = exponent.round();
                if (exponent - n).abs() == 0.0 && (0.0..=8.0).contains(&n) {
                    Some(coeff * monomial_weighted_integral(n as u32, omega, a, b))
                } else {
                    None
                }
            }
            ScalarLaw::Tabulated { .. } => None,
            ScalarLaw::Sum { terms } => terms.iter().map(|t| t.closed_integral_weighted(omega, a, b)).sum(),
        }
    }

    fn quadrature<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let mut points = vec![a.min(b), a.max(b)];
        let mut kinks = Vec::new();
        self.kinks(&mut kinks);
        points.extend(kinks.into_iter().filter(|k| *k > a.min(b) && *k < a.max(b)));
        points.sort_by(f64::total_cmp);
        let total: f64 = points.windows(2).map(|w| integrate_relative(&f, w[0], w[1], QUADRATURE_RTOL)).sum();
        if b < a {
            -total
        } else {
            total
        }
    }
}

/// `x^e`, through repeated multiplication when `e` is a small integer.
#[inline]
pub fn pow(x: f64, e: f64) -> f64 {
    if e.abs() <= 16.0 && e == (e as i32) as f64 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// Adaptive double-exponential quadrature driven by a relative tolerance.
pub fn integrate_relative<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let coarse = quadrature::integrate(&f, lo, hi, 1e-6 * (hi - lo)).integral;
    let scale = coarse.abs().max(f64::MIN_POSITIVE.sqrt());
    sign * quadrature::integrate(&f, lo, hi, rtol * scale).integral
}

fn segment(xs: &[f64], x: f64) -> usize {
    match xs.partition_point(|v| *v <= x) {
        0 => 0,
        p if p >= xs.len() => xs.len() - 2,
        p => p - 1,
    }
}

/// `∫_a^b (1+ξ)^{k-ω} dξ`
fn shifted_power_integral(k: u32, omega: f64, a: f64, b: f64) -> f64 {
    let e = k as f64 - omega + 1.0;
    if e == 0.0 {
        ((1.0 + b) / (1.0 + a)).ln()
    } else {
        ((1.0 + b).powf(e) - (1.0 + a).powf(e)) / e
    }
}

/// `∫_a^b ξ^n (1+ξ)^{-ω} dξ` by binomial expansion of `ξ = (1+ξ) - 1`.
fn monomial_weighted_integral(n: u32, omega: f64, a: f64, b: f64) -> f64 {
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..=n {
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * binom * shifted_power_integral(k, omega, a, b);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    total
}
