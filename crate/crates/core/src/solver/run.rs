//! The time loop: steps land exactly on record and snapshot times, budget
//! integrals are accumulated by the trapezoid rule over every step.

use super::scheme::{BudgetRates, Evaluation};
use super::{ClampStats, DtPolicy, MollifiedInitialData, Scheme, SolverError, State};
use crate::fieldops::PROJECTION_TOLERANCE;

/// Allowed relative drift of `∫ρ` between records.
pub const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub record_interval: f64,
    pub snapshot_times: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { record_interval: 0.01, snapshot_times: Vec::new() }
    }
}

/// Time integrals `∫_0^t` of the budget rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CumulativeIntegrals {
    pub production: f64,
    pub viscous: f64,
    pub magnetic: f64,
    pub sink: f64,
    pub eps_dissipation: f64,
    pub artificial_pressure: f64,
    pub entropy_production: f64,
    pub entropy_delta: f64,
    pub entropy_eps: f64,
    /// Cleared once the temperature drops below the entropy floor.
    pub entropy_valid: bool,
}

impl Default for CumulativeIntegrals {
    fn default() -> Self {
        CumulativeIntegrals {
            production: 0.0,
            viscous: 0.0,
            magnetic: 0.0,
            sink: 0.0,
            eps_dissipation: 0.0,
            artificial_pressure: 0.0,
            entropy_production: 0.0,
            entropy_delta: 0.0,
            entropy_eps: 0.0,
            entropy_valid: true,
        }
    }
}

impl CumulativeIntegrals {
    fn accumulate(&mut self, dt: f64, a: &BudgetRates, b: &BudgetRates) {
        let trap = |x: f64, y: f64| 0.5 * dt * (x + y);
        self.production += trap(a.production, b.production);
        self.viscous += trap(a.viscous, b.viscous);
        self.magnetic += trap(a.magnetic, b.magnetic);
        self.sink += trap(a.sink, b.sink);
        self.eps_dissipation += trap(a.eps_dissipation, b.eps_dissipation);
        self.artificial_pressure += trap(a.artificial_pressure, b.artificial_pressure);
        match (a.entropy, b.entropy) {
            (Some(x), Some(y)) if self.entropy_valid => {
                self.entropy_production += trap(x.production, y.production);
                self.entropy_delta += trap(x.delta_part, y.delta_part);
                self.entropy_eps += trap(x.eps_part, y.eps_part);
            }
            _ => {
                if self.entropy_valid {
                    log::info!("entropy bookkeeping stopped: temperature fell below the entropy floor");
                }
                self.entropy_valid = false;
            }
        }
    }

    /// `∫δ(∫Ψ:∇u + ν∫|∇×H|² + ∫θ^{α+1})dt`
    pub fn delta_dissipation(&self, delta: f64) -> f64 {
        delta * (self.viscous + self.magnetic + self.sink)
    }
}

#[derive(Clone, Debug)]
pub struct Frame {
    pub state: State,
    /// Budget rates at this instant.
    pub rates: BudgetRates,
    pub integrals: CumulativeIntegrals,
    pub steps: usize,
    pub guard_incidents: u64,
}

#[derive(Debug)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub snapshots: Vec<State>,
    pub clamp: ClampStats,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    /// The error that ended the run early, if any; frames up to it are kept.
    pub failure: Option<SolverError>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Frame> {
        self.frames.last()
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Record times `kΔ ≤ t_end`, `t_end` itself and the snapshot times, merged.
fn event_times(t_end: f64, config: &RunConfig) -> (Vec<f64>, Vec<(bool, bool)>) {
    let mut events: Vec<(f64, bool, bool)> = Vec::new();
    let interval = config.record_interval;
    if interval > 0.0 && interval.is_finite() {
        let count = (t_end / interval + 1e-9).floor() as usize;
        events.extend((0..=count).map(|k| ((k as f64 * interval).min(t_end), true, false)));
    } else {
        events.push((0.0, true, false));
    }
    events.push((t_end, true, false));
    events.extend(config.snapshot_times.iter().filter(|&&t| (0.0..=t_end).contains(&t)).map(|&t| (t, false, true)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, bool, bool)> = Vec::new();
    for (t, rec, snap) in events {
        match merged.last_mut() {
            Some(last) if (t - last.0).abs() <= 1e-12 * t_end.max(1.0) => {
                last.1 |= rec;
                last.2 |= snap;
            }
            _ => merged.push((t, rec, snap)),
        }
    }
    merged.into_iter().map(|(t, r, s)| (t, (r, s))).unzip()
}

fn check_invariants(scheme: &Scheme, state: &State, mass0: f64) -> Result<(), SolverError> {
    let g = scheme.grid();
    let time = state.time;
    let mass = state.rho.integrate(g);
    if (mass - mass0).abs() > MASS_TOLERANCE * mass0.abs() {
        return Err(SolverError::Invariant { time, what: format!("mass drifted from {mass0:e} to {mass:e}") });
    }
    if !(state.rho.min() > 0.0) || !(state.theta.min() >= 0.0) {
        return Err(SolverError::Invariant {
            time,
            what: format!("positivity lost: min rho = {}, min theta = {}", state.rho.min(), state.theta.min()),
        });
    }
    let div = scheme.projector().divergence_norm(&state.h)?;
    let norm = state.h.l2_norm(g);
    if div > PROJECTION_TOLERANCE * norm && div > f64::MIN_POSITIVE {
        return Err(SolverError::Invariant { time, what: format!("|div H| = {div:e} against |H| = {norm:e}") });
    }
    Ok(())
}

/// Integrates from the mollified data to `t_end`.
pub fn run(scheme: &Scheme, initial: &MollifiedInitialData, config: &RunConfig) -> Trajectory {
    let mut traj = Trajectory {
        frames: Vec::new(),
        snapshots: Vec::new(),
        clamp: initial.stats,
        steps: 0,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
        failure: None,
    };
    if let Err(err) = drive(scheme, initial, config, &mut traj) {
        log::error!("run aborted: {err}");
        traj.failure = Some(err);
    }
    traj
}

fn drive(
    scheme: &Scheme,
    initial: &MollifiedInitialData,
    config: &RunConfig,
    traj: &mut Trajectory,
) -> Result<(), SolverError> {
    let params = scheme.params();
    let t_end = params.t_end;
    if !(config.record_interval > 0.0) {
        return Err(SolverError::Parameter(format!("record interval {} must be positive", config.record_interval)));
    }
    let (times, kinds) = event_times(t_end, config);
    let mut state = initial.state();
    let mass0 = state.rho.integrate(scheme.grid());
    let mut eval: Evaluation = scheme.evaluate(&state, true)?;
    let mut integrals = CumulativeIntegrals::default();
    let mut guard = 0u64;
    let mut next = 0;

    loop {
        if (state.time - times[next]).abs() <= 1e-12 * t_end.max(1.0) {
            state.time = times[next];
            let (record, snapshot) = kinds[next];
            let rates = eval.budget.expect("budget requested");
            if record {
                traj.frames.push(Frame {
                    state: state.clone(),
                    rates,
                    integrals,
                    steps: traj.steps,
                    guard_incidents: guard,
                });
                log::debug!("record t = {:.6} after {} steps", state.time, traj.steps);
            }
            if snapshot {
                traj.snapshots.push(state.clone());
            }
            check_invariants(scheme, &state, mass0)?;
            next += 1;
            if next == times.len() {
                return Ok(());
            }
        }
        let limit = scheme.stability_limit(&state);
        let target = match params.dt {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Cfl { .. } => scheme.safety() * limit,
        };
        let remaining = times[next] - state.time;
        let (dt, land) = if target >= remaining * (1.0 - 1e-9) {
            (remaining, true)
        } else if target > 0.5 * remaining {
            // split the approach in two rather than leave a sliver
            (0.5 * remaining, false)
        } else {
            (target, false)
        };
        let (mut stepped, report) = scheme.step_within(&state, &eval.rates, dt, limit)?;
        if land {
            stepped.time = times[next];
        }
        let fresh = scheme.evaluate(&stepped, true)?;
        integrals.accumulate(dt, eval.budget.as_ref().expect("budget"), fresh.budget.as_ref().expect("budget"));
        guard += report.guard_incidents;
        traj.steps += 1;
        traj.dt_min = traj.dt_min.min(dt);
        traj.dt_max = traj.dt_max.max(dt);
        state = stepped;
        eval = fresh;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_merge_records_snapshots_and_the_end() {
        let cfg = RunConfig { record_interval: 0.1, snapshot_times: vec![0.25, 0.3, 2.0] };
        let (t, k) = event_times(0.35, &cfg);
        assert_eq!(t.len(), 6);
        assert_eq!(t[3], 0.25);
        assert_eq!(k[3], (false, true));
        assert!(k[4].0 && k[4].1);
        assert_eq!(*t.last().unwrap(), 0.35);
        let (t, _) = event_times(0.0, &cfg);
        assert_eq!(t, vec![0.0]);
    }
}
