//! Discrete energy and entropy balances between records, and the
//! artificial-pressure monitor.
//!
//! Time integrals come from the per-step trapezoid sums the time loop keeps
//! in every frame, so differences between two records are exact sums over
//! the steps in between.

use super::{regularized_energy, DiagnosticsError};
use crate::fieldops::integrate_by;
use crate::solver::{Frame, Scheme, ENTROPY_THETA_FLOOR};

/// `tol = c1·dt + c2·h²`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub c1: f64,
    pub c2: f64,
}

impl Tolerance {
    pub fn at(&self, dt: f64, h: f64) -> f64 {
        self.c1 * dt + self.c2 * h * h
    }
}

/// Energy balance between two records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyPair {
    pub t0: f64,
    pub t1: f64,
    /// `E_δ(t1) + ∫δ(∫Ψ:∇u + ν∫|∇×H|² + ∫θ^{α+1}) - E_δ(t0)`
    pub residual: f64,
    /// `ΔE_δ - ∫dE_δ/dt`: error of the time integrator.
    pub time_defect: f64,
    /// `∫dE_δ/dt + ΔD_δ + ΔD_ε`: error of the spatial discretization.
    pub space_defect: f64,
    /// `ε∫∫(p_e'(ρ)/ρ + δβρ^{β-2})|∇ρ|²`, the dissipation the residual omits.
    pub eps_dissipation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBudgetReport {
    pub pairs: Vec<EnergyPair>,
    /// First record to last.
    pub total: EnergyPair,
    pub tolerance: f64,
    /// Largest `residual - tolerance` over the pairs and the total.
    pub worst_violation: f64,
}

impl EnergyBudgetReport {
    pub fn passed(&self) -> bool {
        self.worst_violation <= 0.0
    }
}

fn check_window(frames: &[Frame]) -> Result<(), DiagnosticsError> {
    if frames.is_empty() {
        return Err(DiagnosticsError::InvalidWindow("no records".into()));
    }
    if let Some(w) = frames.windows(2).find(|w| !(w[1].state.time > w[0].state.time)) {
        return Err(DiagnosticsError::InvalidWindow(format!(
            "record times {} then {} are not increasing",
            w[0].state.time, w[1].state.time
        )));
    }
    Ok(())
}

/// Checks `residual ≤ tol.at(dt, h_min)` for consecutive records; `dt` is
/// the largest step taken.
pub fn energy_budget_check(
    scheme: &Scheme,
    frames: &[Frame],
    dt: f64,
    tol: Tolerance,
) -> Result<EnergyBudgetReport, DiagnosticsError> {
    check_window(frames)?;
    let g = scheme.grid();
    let delta = scheme.params().delta;
    let energies: Vec<f64> =
        frames.iter().map(|f| regularized_energy(g, &f.state, scheme.law(), scheme.params())).collect();
    let pair = |a: usize, b: usize| {
        let (ia, ib) = (&frames[a].integrals, &frames[b].integrals);
        let de = energies[b] - energies[a];
        let dp = ib.production - ia.production;
        let dd = ib.delta_dissipation(delta) - ia.delta_dissipation(delta);
        let deps = ib.eps_dissipation - ia.eps_dissipation;
        EnergyPair {
            t0: frames[a].state.time,
            t1: frames[b].state.time,
            residual: de + dd,
            time_defect: de - dp,
            space_defect: dp + dd + deps,
            eps_dissipation: deps,
        }
    };
    let pairs: Vec<EnergyPair> = (1..frames.len()).map(|k| pair(k - 1, k)).collect();
    let total = pair(0, frames.len() - 1);
    let tolerance = tol.at(dt, g.h_min());
    let worst_violation =
        pairs.iter().chain(std::iter::once(&total)).map(|p| p.residual - tolerance).fold(f64::NEG_INFINITY, f64::max);
    Ok(EnergyBudgetReport { pairs, total, tolerance, worst_violation })
}

/// Entropy balance between two records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyPair {
    pub t0: f64,
    pub t1: f64,
    /// `Δ∫ρs - ∫∫((ν|∇×H|² + Ψ:∇u)/θ + κ|∇θ|²/θ²)`
    pub imbalance: f64,
    /// `∫∫((ν|∇×H|² + Ψ:∇u)/θ + κ|∇θ|²/θ²)`
    pub production: f64,
    /// What the regularization contributes to `Δ∫ρs`: the `δ` sink and
    /// heating terms, `-δΔ∫S(θ)` and the `ε` density-diffusion term.
    pub regularization: f64,
    /// `imbalance - regularization`, the discretization error.
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub pairs: Vec<EntropyPair>,
    pub total: EntropyPair,
}

pub fn entropy_balance(scheme: &Scheme, frames: &[Frame]) -> Result<EntropyReport, DiagnosticsError> {
    check_window(frames)?;
    let g = scheme.grid();
    let law = scheme.law();
    let delta = scheme.params().delta;
    for f in frames {
        let lo = f.state.theta.min();
        if !(lo > 0.0) || lo < ENTROPY_THETA_FLOOR {
            return Err(DiagnosticsError::Domain(format!("min theta = {lo:e} at t = {}", f.state.time)));
        }
        if !f.integrals.entropy_valid {
            return Err(DiagnosticsError::Domain(format!("entropy bookkeeping stopped before t = {}", f.state.time)));
        }
    }
    let totals: Vec<(f64, f64)> = frames
        .iter()
        .map(|f| {
            let (r, t) = (&f.state.rho, &f.state.theta);
            (
                integrate_by(g, |i| r.data[i] * law.entropy_unchecked(r.data[i], t.data[i])),
                integrate_by(g, |i| law.thermal_entropy(t.data[i])),
            )
        })
        .collect();
    let pair = |a: usize, b: usize| {
        let (ia, ib) = (&frames[a].integrals, &frames[b].integrals);
        let production = ib.entropy_production - ia.entropy_production;
        let regularization = (ib.entropy_delta - ia.entropy_delta) + (ib.entropy_eps - ia.entropy_eps)
            - delta * (totals[b].1 - totals[a].1);
        let imbalance = totals[b].0 - totals[a].0 - production;
        EntropyPair {
            t0: frames[a].state.time,
            t1: frames[b].state.time,
            imbalance,
            production,
            regularization,
            defect: imbalance - regularization,
        }
    };
    Ok(EntropyReport { pairs: (1..frames.len()).map(|k| pair(k - 1, k)).collect(), total: pair(0, frames.len() - 1) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorPoint {
    pub t: f64,
    /// `δ∫ρ^β`
    pub artificial_pressure: f64,
    /// `δ∫_0^t∫(ρ^β + θ^{α+1})`
    pub cumulative: f64,
}

pub fn artificial_pressure_monitor(frames: &[Frame], delta: f64) -> Result<Vec<MonitorPoint>, DiagnosticsError> {
    if !(delta > 0.0) {
        return Err(DiagnosticsError::Parameter(format!("delta = {delta} violates delta > 0")));
    }
    check_window(frames)?;
    Ok(frames
        .iter()
        .map(|f| MonitorPoint {
            t: f.state.time,
            artificial_pressure: f.rates.artificial_pressure,
            cumulative: f.integrals.artificial_pressure + delta * f.integrals.sink,
        })
        .collect())
}

/// Trapezoid mean of `δ∫ρ^β` over the series; the single value when the
/// series has one point.
pub fn time_average(points: &[MonitorPoint]) -> f64 {
    match points {
        [] => f64::NAN,
        [p] => p.artificial_pressure,
        _ => {
            let span = points[points.len() - 1].t - points[0].t;
            let area: f64 = points
                .windows(2)
                .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].artificial_pressure + w[1].artificial_pressure))
                .sum();
            area / span
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ConstitutiveLaw;
    use crate::fieldops::Grid;
    use crate::solver::{mollify_initial_data, run, DtPolicy, RawInitialData, RunConfig, SchemeParams, State};

    fn rest_run(dt: f64) -> (Scheme, Vec<Frame>) {
        let g = Grid::unit_box([4, 4, 1]);
        let law = ConstitutiveLaw::default();
        let p = SchemeParams { t_end: 0.2, dt: DtPolicy::Fixed { dt }, ..SchemeParams::default() };
        let s = State::uniform(&g, 1.0, 1.0);
        let raw = RawInitialData { rho: s.rho.clone(), m: s.momentum(), theta: s.theta.clone(), h: s.h.clone() };
        let init = mollify_initial_data(&g, &raw, &p, None).unwrap();
        let scheme = Scheme::new(&g, &law, &p).unwrap();
        let traj = run(&scheme, &init, &RunConfig { record_interval: 0.1, snapshot_times: vec![] });
        assert!(traj.completed());
        (scheme, traj.frames)
    }

    #[test]
    fn rest_state_residual_is_the_sink_quadrature_error() {
        let (s1, f1) = rest_run(1e-2);
        let (s2, f2) = rest_run(5e-3);
        let tol = Tolerance { c1: 1.0, c2: 0.0 };
        let r1 = energy_budget_check(&s1, &f1, 1e-2, tol).unwrap();
        let r2 = energy_budget_check(&s2, &f2, 5e-3, tol).unwrap();
        assert!(r1.passed());
        assert!(r1.total.space_defect.abs() < 1e-15 && r1.total.eps_dissipation == 0.0);
        let ratio = r1.total.residual / r2.total.residual;
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
        let ent = entropy_balance(&s1, &f1).unwrap();
        assert!(ent.total.production.abs() < 1e-15);
        assert!(ent.total.defect.abs() < 1e-5, "{:?}", ent.total);
    }

    #[test]
    fn reversed_window_is_rejected() {
        let (s, mut f) = rest_run(1e-2);
        f.reverse();
        let tol = Tolerance { c1: 1.0, c2: 1.0 };
        assert!(matches!(energy_budget_check(&s, &f, 1e-2, tol), Err(DiagnosticsError::InvalidWindow(_))));
    }

    #[test]
    fn monitor_of_a_unit_density() {
        let (_, f) = rest_run(1e-2);
        let m = artificial_pressure_monitor(&f, 0.1).unwrap();
        assert!(m.iter().all(|p| (p.artificial_pressure - 0.1).abs() < 1e-15));
        assert!((time_average(&m) - 0.1).abs() < 1e-15);
        assert!(m[2].cumulative > m[1].cumulative);
        assert!(artificial_pressure_monitor(&f, 0.0).is_err());
    }
}
