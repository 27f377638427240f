//! Density sequences oscillating at frequency `n` on the torus `[0, 2π)²`,
//! comparing how the pressure and the effective viscous flux correlate with
//! the truncated density `T_k(ρ_n)`.
//!
//! The velocity is chosen so the flux is the same smooth profile for every
//! `n`: `(λ+2μ) div u_n = p_n + δρ_n^β - F̄ - c_n`, inverted with the symbol
//! of the centered difference so the discrete divergence reproduces it.

use super::{commutator_probe, effective_viscous_flux, CompactnessError, SpectralOperators};
use crate::constitutive::{cutoff, pow, ConstitutiveLaw};
use crate::diagnostics::fmt_float;
use crate::fieldops::{Grid, Parity, ScalarField, VectorField};
use crate::solver::{SchemeParams, State};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillationConfig {
    /// Nodes per axis of the square torus.
    pub nodes: usize,
    pub modes: Vec<usize>,
    /// `k` in `T_k(ρ) = min(ρ, k)`.
    pub cutoff: f64,
    pub rho_bar: f64,
    pub amplitude: f64,
    pub rho_min: f64,
    pub theta_bar: f64,
}

impl Default for OscillationConfig {
    fn default() -> Self {
        OscillationConfig {
            nodes: 256,
            modes: vec![4, 8, 16, 32],
            cutoff: 1.1,
            rho_bar: 1.0,
            amplitude: 0.3,
            rho_min: 0.05,
            theta_bar: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefectRow {
    pub n: usize,
    /// Correlation defect of the flux `F_n` with `T_k(ρ_n)`.
    pub d1: f64,
    /// The same with the pressure `p(ρ_n, θ_n)`.
    pub d2: f64,
    pub commutator_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectTable {
    pub rows: Vec<DefectRow>,
    pub convention: String,
    pub d1_nonincreasing: bool,
    pub d2_nonincreasing: bool,
}

impl DefectTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# extension: {}\n", self.convention);
        s += &format!("# d1_nonincreasing: {}\n# d2_nonincreasing: {}\n", self.d1_nonincreasing, self.d2_nonincreasing);
        s += "n,d1,d2,commutator_norm\n";
        for r in &self.rows {
            s += &format!("{},{},{},{}\n", r.n, fmt_float(r.d1), fmt_float(r.d2), fmt_float(r.commutator_norm));
        }
        s
    }
}

fn weighted_covariance(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let mean = |f: &[f64]| w.iter().zip(f).map(|(w, f)| w * f).sum::<f64>() / total;
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    mean(&ab) - mean(a) * mean(b)
}

pub fn oscillation_experiment(
    config: &OscillationConfig,
    law: &ConstitutiveLaw,
    params: &SchemeParams,
) -> Result<DefectTable, CompactnessError> {
    let c = config;
    if c.nodes < 8 || c.modes.iter().any(|&n| n == 0 || 2 * n >= c.nodes) {
        return Err(CompactnessError::Parameter(format!(
            "modes {:?} must be resolved on {} nodes per axis",
            c.modes, c.nodes
        )));
    }
    if !(c.rho_min > 0.0 && c.rho_bar > c.rho_min && c.amplitude >= 0.0 && c.theta_bar > 0.0) {
        return Err(CompactnessError::Parameter("need rho_bar > rho_min > 0, amplitude >= 0, theta_bar > 0".into()));
    }
    cutoff(c.rho_bar, c.cutoff)?;
    let g = Grid::torus([c.nodes, c.nodes, 1], 2.0 * PI)?;
    let ops = SpectralOperators::new(&g);
    let h = g.h(0);
    let weight = ScalarField::from_fn(&g, Parity::Even, |x| (0.5 * (x[0].cos() + x[1].cos())).exp());
    let theta = ScalarField::from_fn(&g, Parity::Even, |x| c.theta_bar * (1.0 + 0.2 * x[1].cos()));
    let target = ScalarField::from_fn(&g, Parity::Even, |x| 0.1 * (x[0] + x[1]).cos());
    let visc: Vec<f64> = theta.data.iter().map(|&t| law.lambda.eval(t) + 2.0 * law.mu.eval(t)).collect();
    if visc.iter().any(|&v| !(v > 0.0)) {
        return Err(CompactnessError::Parameter("lambda + 2 mu must be positive".into()));
    }
    let mu = theta.map(|t| law.mu.eval(t));
    let modified = |xi: f64| (xi * h).sin() / h;

    let mut rows = Vec::with_capacity(c.modes.len());
    for &n in &c.modes {
        let raw: Vec<f64> =
            (0..g.len()).map(|i| c.rho_bar + c.amplitude * (n as f64 * g.position(i)[0]).sin()).collect();
        let clipped = raw.iter().filter(|&&r| r < c.rho_min).count();
        let fraction = clipped as f64 / g.len() as f64;
        if fraction > 0.1 {
            return Err(CompactnessError::Clipping { fraction });
        }
        let rho = ScalarField::from_vec(&g, [Parity::Even; 3], raw.iter().map(|&r| r.max(c.rho_min)).collect())?;
        let pressure: Vec<f64> = (0..g.len()).map(|i| law.pressure_unchecked(rho.data[i], theta.data[i])).collect();
        let excess: Vec<f64> = (0..g.len())
            .map(|i| (pressure[i] + params.delta * pow(rho.data[i], params.beta) - target.data[i]) / visc[i])
            .collect();
        let shift = excess.iter().sum::<f64>() / visc.iter().map(|v| 1.0 / v).sum::<f64>();
        let source =
            ScalarField::from_vec(&g, [Parity::Even; 3], (0..g.len()).map(|i| excess[i] - shift / visc[i]).collect())?;
        let u = VectorField::new(std::array::from_fn(|a| {
            if a == 2 {
                return ScalarField::zeros(&g);
            }
            let mut odd = [false; 3];
            odd[a] = true;
            ops.apply_symbol(&source, odd, |xi| {
                let k: [f64; 3] = xi.map(modified);
                let k2 = k[0] * k[0] + k[1] * k[1];
                if k2 < 1e-300 {
                    Complex::new(0.0, 0.0)
                } else {
                    Complex::new(0.0, -k[a] / k2)
                }
            })
            .expect("grid matches")
        }));
        let state = State::new(0.0, rho.clone(), u.clone(), theta.clone(), VectorField::zeros(&g));
        let flux = effective_viscous_flux(&g, &state, params, law)?;
        let truncated: Vec<f64> = rho.data.iter().map(|&r| r.min(c.cutoff)).collect();
        let (_, commutator_norm) = commutator_probe(&ops, &weight, &mu, &u)?;
        rows.push(DefectRow {
            n,
            d1: weighted_covariance(&weight.data, &flux.data, &truncated).abs(),
            d2: weighted_covariance(&weight.data, &pressure, &truncated).abs(),
            commutator_norm,
        });
    }
    let nonincreasing = |f: fn(&DefectRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]));
    Ok(DefectTable {
        d1_nonincreasing: nonincreasing(|r| r.d1),
        d2_nonincreasing: nonincreasing(|r| r.d2),
        convention: ops.convention(),
        rows,
    })
}
