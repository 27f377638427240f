use super::scenario::{Scenario, RESOLVED_NAME};
use super::CliError;
use crate::compactness::{oscillation_experiment, DefectTable};
use crate::diagnostics::{
    artificial_pressure_monitor, default_bank, energy_budget_check, entropy_balance, fmt_float, records,
    thermal_weak_residual, time_average, write_csv, DiagnosticsRecord, EnergyBudgetReport, MonitorPoint,
};
use crate::fieldops::Snapshot;
use crate::solver::mms::{default_suite, ConvergenceTable, Manufactured};
use crate::solver::{mollify_initial_data, run, Scheme, SolverError, Trajectory};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const MMS_SUITES: [&str; 1] = ["1d"];

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

/// Creates the output directory and writes the resolved scenario into it.
pub fn prepare_output(scenario: &Scenario, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("cannot create {}", dir.display()), e))?;
    write(&dir.join(RESOLVED_NAME), &scenario.resolved_toml())
}

pub struct RunOutcome {
    pub scheme: Scheme,
    pub trajectory: Trajectory,
    pub records: Vec<DiagnosticsRecord>,
    pub energy: Option<EnergyBudgetReport>,
    /// One residual per member of the default test bank.
    pub thermal: Option<Vec<f64>>,
    /// `-(C₁dt + C₂h²)`, the lowest admissible thermal residual.
    pub thermal_floor: f64,
    pub monitor: Vec<MonitorPoint>,
}

impl RunOutcome {
    /// The artificial-pressure time average, NaN without records.
    pub fn time_average(&self) -> f64 {
        time_average(&self.monitor)
    }

    pub fn verdict(&self) -> Result<(), CliError> {
        if let Some(err) = &self.trajectory.failure {
            return Err(solver_error(err));
        }
        if let Some(e) = self.energy.as_ref().filter(|e| !e.passed()) {
            return Err(CliError::Invariant(format!(
                "energy budget residual exceeds its tolerance {:e} by {:e}",
                e.tolerance, e.worst_violation
            )));
        }
        if let Some(low) = self.thermal.as_ref().and_then(|r| r.iter().cloned().reduce(f64::min)) {
            if low < self.thermal_floor {
                return Err(CliError::Invariant(format!("thermal residual {low:e} is below {:e}", self.thermal_floor)));
            }
        }
        Ok(())
    }
}

fn solver_error(err: &SolverError) -> CliError {
    match err {
        SolverError::Invariant { .. } => CliError::Invariant(err.to_string()),
        SolverError::Numerical { .. } => CliError::Numerical(err.to_string()),
        _ => CliError::Config(err.to_string()),
    }
}

fn energy_csv(report: &EnergyBudgetReport) -> String {
    let mut s = String::from("t0,t1,residual,time_defect,space_defect,eps_dissipation,tolerance\n");
    for p in report.pairs.iter().chain(std::iter::once(&report.total)) {
        let cells = [p.t0, p.t1, p.residual, p.time_defect, p.space_defect, p.eps_dissipation, report.tolerance];
        s += &cells.map(fmt_float).join(",");
        s.push('\n');
    }
    s
}

fn monitor_csv(points: &[MonitorPoint]) -> String {
    let mut s = String::from("t,artificial_pressure,cumulative\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", fmt_float(p.t), fmt_float(p.artificial_pressure), fmt_float(p.cumulative));
    }
    s
}

/// Runs one scenario and writes its artifacts into `dir`, which must exist.
pub fn execute(scenario: &Scenario, dir: &Path) -> Result<RunOutcome, CliError> {
    let grid = scenario.grid()?;
    let law = scenario.law()?;
    let params = scenario.scheme.clone();
    let raw = scenario.initial_data(&grid)?;
    let initial = mollify_initial_data(&grid, &raw, &params, None).map_err(|e| solver_error(&e))?;
    let scheme = Scheme::new(&grid, &law, &params).map_err(|e| CliError::Config(e.to_string()))?;
    let trajectory = run(&scheme, &initial, &scenario.run_config());
    let diag = |e: crate::diagnostics::DiagnosticsError| CliError::Numerical(format!("diagnostics: {e}"));

    let records = records(&scheme, &trajectory).map_err(diag)?;
    let mut csv = Vec::new();
    write_csv(&mut csv, &records).map_err(diag)?;
    fs::write(dir.join("diagnostics.csv"), csv).map_err(|e| CliError::io("diagnostics.csv", e))?;

    let frames = &trajectory.frames;
    let monitor =
        if frames.is_empty() { vec![] } else { artificial_pressure_monitor(frames, params.delta).map_err(diag)? };
    write(&dir.join("monitor.csv"), &monitor_csv(&monitor))?;

    let tolerance = scenario.tolerance();
    let thermal_floor = -tolerance.at(trajectory.dt_max, grid.h_min());
    let (mut energy, mut thermal) = (None, None);
    if frames.len() >= 2 {
        let report = energy_budget_check(&scheme, frames, trajectory.dt_max, tolerance).map_err(diag)?;
        write(&dir.join("energy_budget.csv"), &energy_csv(&report))?;
        energy = Some(report);
        match entropy_balance(&scheme, frames) {
            Ok(e) => {
                let mut s = String::from("t0,t1,imbalance,production,regularization,defect\n");
                for p in e.pairs.iter().chain(std::iter::once(&e.total)) {
                    s += &[p.t0, p.t1, p.imbalance, p.production, p.regularization, p.defect].map(fmt_float).join(",");
                    s.push('\n');
                }
                write(&dir.join("entropy.csv"), &s)?;
            }
            Err(e) => log::warn!("entropy balance skipped: {e}"),
        }
        let bank = default_bank(&grid, frames[frames.len() - 1].state.time);
        match thermal_weak_residual(&scheme, frames, &bank, params.omega) {
            Ok(r) => {
                let mut s = String::from("test,residual,floor\n");
                for (k, v) in r.iter().enumerate() {
                    let _ = writeln!(s, "{k},{},{}", fmt_float(*v), fmt_float(thermal_floor));
                }
                write(&dir.join("thermal.csv"), &s)?;
                thermal = Some(r);
            }
            Err(e) => log::warn!("thermal residual skipped: {e}"),
        }
    }

    if !trajectory.snapshots.is_empty() {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir).map_err(|e| CliError::io("snapshots", e))?;
        for s in &trajectory.snapshots {
            let t = s.time;
            let files = [
                ("rho", Snapshot::scalar(&grid, "rho", t, &s.rho)),
                ("u", Snapshot::vector(&grid, "u", t, &s.u)),
                ("theta", Snapshot::scalar(&grid, "theta", t, &s.theta)),
                ("h", Snapshot::vector(&grid, "H", t, &s.h)),
            ];
            for (name, snap) in files {
                let path = snap_dir.join(format!("t{t:.6}_{name}.snap"));
                snap.save(&path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
            }
        }
    }
    Ok(RunOutcome { scheme, trajectory, records, energy, thermal, thermal_floor, monitor })
}

pub fn cmd_run(scenario: &Scenario) -> Result<RunOutcome, CliError> {
    let dir = scenario.output.clone();
    prepare_output(scenario, &dir)?;
    let outcome = execute(scenario, &dir)?;
    let t = &outcome.trajectory;
    println!(
        "{} steps, dt in [{:e}, {:e}], {} records, written to {}",
        t.steps,
        t.dt_min,
        t.dt_max,
        t.frames.len(),
        dir.display()
    );
    if let Some(e) = &outcome.energy {
        println!("energy residual {:e} (tolerance {:e})", e.total.residual, e.tolerance);
    }
    outcome.verdict()?;
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    /// `ok`, `config`, `invariant` or `numerical`.
    pub status: String,
    pub steps: usize,
    pub time_average: f64,
    pub final_artificial_pressure: f64,
}

fn status_of(err: &CliError) -> &'static str {
    match err {
        CliError::Config(_) => "config",
        CliError::Invariant(_) => "invariant",
        CliError::Numerical(_) => "numerical",
    }
}

/// Directory of one sweep point below the scenario output.
pub fn sweep_point_dir(root: &Path, epsilon: f64, delta: f64) -> PathBuf {
    root.join("sweep").join(format!("eps{epsilon:e}_delta{delta:e}"))
}

pub fn sweep_summary_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("epsilon,delta,status,steps,time_avg_artificial_pressure,final_artificial_pressure\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_float(r.epsilon),
            fmt_float(r.delta),
            r.status,
            r.steps,
            fmt_float(r.time_average),
            fmt_float(r.final_artificial_pressure)
        );
    }
    let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    eps.dedup();
    for e in eps {
        let series: Vec<&SweepRow> = rows.iter().filter(|r| r.epsilon == e).collect();
        let decreasing =
            series.iter().all(|r| r.status == "ok") && series.windows(2).all(|w| w[1].time_average < w[0].time_average);
        let _ = writeln!(s, "# epsilon {} time average strictly decreasing in delta: {decreasing}", fmt_float(e));
    }
    s
}

/// Runs every sweep point and writes the summary; the second element is
/// the worst per-point failure.
pub fn sweep(scenario: &Scenario) -> Result<(Vec<SweepRow>, Option<CliError>), CliError> {
    let root = scenario.output.clone();
    prepare_output(scenario, &root)?;
    let points: Vec<(f64, f64)> =
        scenario.sweep.epsilon.iter().flat_map(|&e| scenario.sweep.delta.iter().map(move |&d| (e, d))).collect();
    let results: Vec<(SweepRow, Option<CliError>)> = points
        .par_iter()
        .map(|&(epsilon, delta)| {
            let mut s = scenario.clone();
            s.scheme.epsilon = epsilon;
            s.scheme.delta = delta;
            let dir = sweep_point_dir(&root, epsilon, delta);
            s.output = dir.clone();
            let outcome = s.validate().and_then(|_| prepare_output(&s, &dir)).and_then(|_| execute(&s, &dir));
            let mut row = SweepRow {
                epsilon,
                delta,
                status: "ok".into(),
                steps: 0,
                time_average: f64::NAN,
                final_artificial_pressure: f64::NAN,
            };
            let err = match outcome {
                Ok(o) => {
                    row.steps = o.trajectory.steps;
                    row.time_average = o.time_average();
                    row.final_artificial_pressure = o.monitor.last().map_or(f64::NAN, |p| p.artificial_pressure);
                    o.verdict().err()
                }
                Err(e) => Some(e),
            };
            if let Some(e) = &err {
                log::error!("sweep point epsilon = {epsilon:e}, delta = {delta:e}: {e}");
                row.status = status_of(e).into();
            }
            (row, err)
        })
        .collect();
    let rows: Vec<SweepRow> = results.iter().map(|(r, _)| r.clone()).collect();
    let summary = sweep_summary_csv(&rows);
    write(&root.join("sweep_summary.csv"), &summary)?;
    let worst = results.into_iter().filter_map(|(_, e)| e).max_by_key(|e| e.exit_code());
    Ok((rows, worst))
}

pub fn cmd_sweep(scenario: &Scenario) -> Result<Vec<SweepRow>, CliError> {
    let (rows, worst) = sweep(scenario)?;
    print!("{}", sweep_summary_csv(&rows));
    match worst {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

/// Spatial grids of the manufactured suite and its final time.
const MMS_GRIDS: [usize; 3] = [64, 128, 256];
const MMS_T_FINAL: f64 = 0.1;
pub const MMS_MIN_ORDER: f64 = 1.8;

/// Spatial and temporal tables of a manufactured suite, written into `out`.
pub fn mms_tables(suite: &str, out: &Path) -> Result<(ConvergenceTable, ConvergenceTable), CliError> {
    if !MMS_SUITES.contains(&suite) {
        return Err(CliError::Config(format!("unknown mms suite `{suite}`; known: {}", MMS_SUITES.join(", "))));
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(&format!("cannot create {}", out.display()), e))?;
    let (law, params) = default_suite();
    let m = Manufactured::new(&law, &params).map_err(|e| CliError::Config(e.to_string()))?;
    let spatial = m.spatial_table(&MMS_GRIDS, MMS_T_FINAL).map_err(|e| solver_error(&e))?;
    let temporal = m.temporal_table(MMS_GRIDS[0] / 2, 2, MMS_T_FINAL).map_err(|e| solver_error(&e))?;
    write(&out.join("mms_spatial.csv"), &spatial.to_csv())?;
    write(&out.join("mms_temporal.csv"), &temporal.to_csv())?;
    Ok((spatial, temporal))
}

pub fn cmd_mms(suite: &str, out: &Path) -> Result<(ConvergenceTable, ConvergenceTable), CliError> {
    let (spatial, temporal) = mms_tables(suite, out)?;
    print!("{}{}", spatial.to_csv(), temporal.to_csv());
    let low = spatial.orders.iter().chain(&temporal.orders).cloned().fold(f64::INFINITY, f64::min);
    if !(low >= MMS_MIN_ORDER) {
        return Err(CliError::Invariant(format!("fitted order {low:.3} is below {MMS_MIN_ORDER}")));
    }
    Ok((spatial, temporal))
}

pub fn cmd_compactness(scenario: &Scenario) -> Result<DefectTable, CliError> {
    let dir = scenario.output.clone();
    prepare_output(scenario, &dir)?;
    let law = scenario.law()?;
    let table = oscillation_experiment(&scenario.compactness, &law, &scenario.scheme)
        .map_err(|e| CliError::Config(format!("compactness: {e}")))?;
    write(&dir.join("compactness.csv"), &table.to_csv())?;
    print!("{}", table.to_csv());
    Ok(table)
}

pub fn cmd_validate(scenario: &Scenario) -> Result<(), CliError> {
    let law = scenario.law()?;
    let report = crate::constitutive::validate_hypotheses(&law, &crate::constitutive::SamplingSpec::default());
    print!("{report}");
    prepare_output(scenario, &scenario.output)?;
    print!("{}", scenario.resolved_toml());
    Ok(())
}
