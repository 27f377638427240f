//! Monitored quantities of a trajectory and the discrete energy, entropy
//! and renormalized thermal balances.

mod budget;
mod thermal;

pub use budget::{
    artificial_pressure_monitor, energy_budget_check, entropy_balance, time_average, EnergyBudgetReport, EnergyPair,
    EntropyPair, EntropyReport, MonitorPoint, Tolerance,
};
pub use thermal::{
    default_bank, thermal_weak_residual, time_weights, Combination, SeparableTest, SpatialProfile, TemporalProfile,
    TestFunction, TestSample, MIN_WIDTH_SPACINGS,
};

use crate::constitutive::{pow, ConstitutiveLaw};
use crate::fieldops::{derivative, integrate_by, FieldError, Grid, ScalarField, VectorField};
use crate::solver::{Frame, Scheme, SchemeParams, SolverError, State, Trajectory};
use rayon::prelude::*;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("outside the domain of the entropy: {0}")]
    Domain(String),
    #[error("ill-formed test function: {0}")]
    IllFormedTest(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The four parts of `E = ∫(½ρ|u|² + ½|H|² + ρP_e(ρ) + ρQ(θ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub magnetic: f64,
    pub elastic: f64,
    pub thermal: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.magnetic + self.elastic + self.thermal
    }
}

pub fn total_energy(grid: &Grid, state: &State, law: &ConstitutiveLaw) -> EnergyParts {
    let (rho, u, h, th) = (&state.rho, &state.u, &state.h, &state.theta);
    EnergyParts {
        kinetic: integrate_by(grid, |i| 0.5 * rho.data[i] * sq(u, i)),
        magnetic: integrate_by(grid, |i| 0.5 * sq(h, i)),
        elastic: integrate_by(grid, |i| law.elastic_energy_density(rho.data[i])),
        thermal: integrate_by(grid, |i| rho.data[i] * law.q(th.data[i])),
    }
}

/// `E_δ = E + ∫(δρ^β/(β-1) + δQ(θ))`, the energy the regularized system dissipates.
pub fn regularized_energy(grid: &Grid, state: &State, law: &ConstitutiveLaw, params: &SchemeParams) -> f64 {
    let SchemeParams { delta, beta, .. } = *params;
    let extra = integrate_by(grid, |i| {
        delta * pow(state.rho.data[i], beta) / (beta - 1.0) + delta * law.q(state.theta.data[i])
    });
    total_energy(grid, state, law).total() + extra
}

fn sq(v: &VectorField, i: usize) -> f64 {
    (0..3).map(|c| v.c[c].data[i] * v.c[c].data[i]).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriNorms {
    /// `‖ρ‖_{L^γ}`
    pub rho_l_gamma: f64,
    /// `‖ρu‖_{L^{2γ/(γ+1)}}`
    pub momentum: f64,
    pub u_h1: f64,
    pub h_h1: f64,
    /// `‖ln(1+θ)‖_{H¹}`
    pub log_theta_h1: f64,
    /// `‖θ^{α/2}‖_{H¹}`
    pub theta_half_alpha_h1: f64,
    /// `‖θ‖_{L^{α+1}}`
    pub theta_l_alpha1: f64,
    /// `‖θ^{(α+1-ω)/2}‖_{H¹}`
    pub theta_renormalized_h1: f64,
}

fn h1_norm(grid: &Grid, f: &ScalarField) -> f64 {
    let grads: Vec<ScalarField> = grid.active_axes().map(|a| derivative(grid, f, a)).collect();
    integrate_by(grid, |i| f.data[i] * f.data[i] + grads.iter().map(|g| g.data[i] * g.data[i]).sum::<f64>()).sqrt()
}

fn h1_norm_vector(grid: &Grid, v: &VectorField) -> f64 {
    v.c.iter().map(|c| h1_norm(grid, c).powi(2)).sum::<f64>().sqrt()
}

pub fn apriori_norms(grid: &Grid, state: &State, law: &ConstitutiveLaw, omega: f64) -> AprioriNorms {
    let (rho, u, th) = (&state.rho, &state.u, &state.theta);
    let gamma = law.gamma;
    let alpha = law.alpha;
    let p = 2.0 * gamma / (gamma + 1.0);
    let momentum = integrate_by(grid, |i| (rho.data[i] * rho.data[i] * sq(u, i)).sqrt().powf(p)).powf(1.0 / p);
    AprioriNorms {
        rho_l_gamma: integrate_by(grid, |i| rho.data[i].abs().powf(gamma)).powf(1.0 / gamma),
        momentum,
        u_h1: h1_norm_vector(grid, u),
        h_h1: h1_norm_vector(grid, &state.h),
        log_theta_h1: h1_norm(grid, &th.map(|t| t.max(0.0).ln_1p())),
        theta_half_alpha_h1: h1_norm(grid, &th.map(|t| pow(t.max(0.0), 0.5 * alpha))),
        theta_l_alpha1: integrate_by(grid, |i| pow(th.data[i].abs(), alpha + 1.0)).powf(1.0 / (alpha + 1.0)),
        theta_renormalized_h1: h1_norm(grid, &th.map(|t| t.max(0.0).powf(0.5 * (alpha + 1.0 - omega)))),
    }
}

/// One row of the diagnostics table.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: EnergyParts,
    pub norms: AprioriNorms,
    /// `δ∫ρ^β`
    pub artificial_pressure: f64,
    /// `∫p(ρ,θ) ln(1+ρ)`
    pub pressure_log_rho: f64,
    /// `∫ρs`, NaN while the temperature is below the entropy floor.
    pub entropy_total: f64,
    /// `∫Ψ:∇u`
    pub viscous_dissipation: f64,
    /// `ν∫|∇×H|²`
    pub magnetic_dissipation: f64,
    pub div_h: f64,
    pub clamp_incidents: usize,
    pub guard_incidents: u64,
    pub regularized_energy: f64,
    /// `δ∫ρ^β ln(1+ρ)`
    pub artificial_pressure_log_rho: f64,
    pub steps: usize,
}

pub const CSV_COLUMNS: [&str; 26] = [
    "t",
    "mass",
    "kinetic_energy",
    "magnetic_energy",
    "elastic_energy",
    "thermal_energy",
    "total_energy",
    "rho_l_gamma",
    "momentum_l_2g_over_g1",
    "u_h1",
    "h_h1",
    "log1p_theta_h1",
    "theta_half_alpha_h1",
    "theta_l_alpha1",
    "artificial_pressure",
    "pressure_log1p_rho",
    "entropy_total",
    "viscous_dissipation",
    "magnetic_dissipation",
    "div_h_l2",
    "clamp_incidents",
    "guard_incidents",
    "regularized_energy",
    "artificial_pressure_log1p_rho",
    "theta_renormalized_h1",
    "steps",
];

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl DiagnosticsRecord {
    pub fn compute(
        scheme: &Scheme,
        frame: &Frame,
        clamp_incidents: usize,
    ) -> Result<DiagnosticsRecord, DiagnosticsError> {
        let g = scheme.grid();
        let law = scheme.law();
        let params = scheme.params();
        let s = &frame.state;
        let (rho, th) = (&s.rho, &s.theta);
        let delta = params.delta;
        let entropy_total = if th.min() >= crate::solver::ENTROPY_THETA_FLOOR {
            integrate_by(g, |i| rho.data[i] * law.entropy_unchecked(rho.data[i], th.data[i]))
        } else {
            f64::NAN
        };
        Ok(DiagnosticsRecord {
            t: s.time,
            mass: rho.integrate(g),
            energy: total_energy(g, s, law),
            norms: apriori_norms(g, s, law, params.omega),
            artificial_pressure: frame.rates.artificial_pressure,
            pressure_log_rho: integrate_by(g, |i| {
                law.pressure_unchecked(rho.data[i], th.data[i]) * rho.data[i].ln_1p()
            }),
            entropy_total,
            viscous_dissipation: frame.rates.viscous,
            magnetic_dissipation: frame.rates.magnetic,
            div_h: scheme.projector().divergence_norm(&s.h)?,
            clamp_incidents,
            guard_incidents: frame.guard_incidents,
            regularized_energy: regularized_energy(g, s, law, params),
            artificial_pressure_log_rho: delta
                * integrate_by(g, |i| pow(rho.data[i], params.beta) * rho.data[i].ln_1p()),
            steps: frame.steps,
        })
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        let e = &self.energy;
        let n = &self.norms;
        let floats = [
            self.t,
            self.mass,
            e.kinetic,
            e.magnetic,
            e.elastic,
            e.thermal,
            e.total(),
            n.rho_l_gamma,
            n.momentum,
            n.u_h1,
            n.h_h1,
            n.log_theta_h1,
            n.theta_half_alpha_h1,
            n.theta_l_alpha1,
            self.artificial_pressure,
            self.pressure_log_rho,
            self.entropy_total,
            self.viscous_dissipation,
            self.magnetic_dissipation,
            self.div_h,
        ];
        let mut cells: Vec<String> = floats.iter().map(|&x| fmt_float(x)).collect();
        cells.push(self.clamp_incidents.to_string());
        cells.push(self.guard_incidents.to_string());
        cells.push(fmt_float(self.regularized_energy));
        cells.push(fmt_float(self.artificial_pressure_log_rho));
        cells.push(fmt_float(n.theta_renormalized_h1));
        cells.push(self.steps.to_string());
        cells.join(",")
    }
}

/// One record per frame, computed in parallel.
pub fn records(scheme: &Scheme, trajectory: &Trajectory) -> Result<Vec<DiagnosticsRecord>, DiagnosticsError> {
    let clamp = trajectory.clamp.incidents();
    trajectory.frames.par_iter().map(|f| DiagnosticsRecord::compute(scheme, f, clamp)).collect()
}

pub fn write_csv<W: Write>(mut w: W, records: &[DiagnosticsRecord]) -> Result<(), DiagnosticsError> {
    writeln!(w, "{}", DiagnosticsRecord::csv_header())?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldops::Parity;
    use crate::solver::DtPolicy;

    fn box2() -> Grid {
        Grid::unit_box([9, 9, 1])
    }

    #[test]
    fn resting_unit_state_has_unit_energy() {
        let g = box2();
        let e = total_energy(&g, &State::uniform(&g, 1.0, 1.0), &ConstitutiveLaw::default());
        assert_eq!(e.elastic, 0.0);
        assert!((e.total() - 1.0).abs() < 1e-15);
        let e = total_energy(&g, &State::uniform(&g, 2.0, 0.0), &ConstitutiveLaw::default());
        assert_eq!(e.kinetic + e.magnetic + e.thermal, 0.0);
        assert!(e.elastic > 0.0);
    }

    #[test]
    fn doubling_h_adds_three_halves_of_its_square() {
        let g = box2();
        let law = ConstitutiveLaw::default();
        let mut s = State::uniform(&g, 1.0, 1.0);
        s.h = VectorField::from_fn(&g, Parity::Odd, |x| [x[1] * (1.0 - x[1]), 0.3, x[0]]);
        let before = total_energy(&g, &s, &law).total();
        let h2 = integrate_by(&g, |i| sq(&s.h, i));
        s.h = s.h.scale(2.0);
        let after = total_energy(&g, &s, &law).total();
        assert!((after - before - 1.5 * h2).abs() < 1e-14);
    }

    #[test]
    fn norms_of_constant_fields() {
        let g = box2();
        let law = ConstitutiveLaw::default();
        let n = apriori_norms(&g, &State::uniform(&g, 2.0, 0.0), &law, 0.5);
        assert!((n.rho_l_gamma - 2.0).abs() < 1e-14);
        assert_eq!((n.log_theta_h1, n.theta_half_alpha_h1, n.momentum), (0.0, 0.0, 0.0));
        assert!((2.0 * law.gamma / (law.gamma + 1.0) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn csv_rows_carry_every_column() {
        let g = box2();
        let law = ConstitutiveLaw::default();
        let p = SchemeParams { dt: DtPolicy::default(), t_end: 0.0, ..SchemeParams::default() };
        let scheme = Scheme::new(&g, &law, &p).unwrap();
        let s = State::uniform(&g, 1.0, 1.0);
        let eval = scheme.evaluate(&s, true).unwrap();
        let frame = Frame {
            state: s,
            rates: eval.budget.unwrap(),
            integrals: Default::default(),
            steps: 0,
            guard_incidents: 0,
        };
        let r = DiagnosticsRecord::compute(&scheme, &frame, 0).unwrap();
        assert!((r.artificial_pressure - 0.1).abs() < 1e-15);
        assert_eq!(r.csv_row().split(',').count(), CSV_COLUMNS.len());
        assert!(r.csv_row().starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    }
}
