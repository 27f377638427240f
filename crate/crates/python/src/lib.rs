//! Python bindings: scenario resolution, runs, the hypothesis validator and
//! the oscillation experiment.

use mhd_lab::cli::{self, CliError, LawSpec, Scenario};
use mhd_lab::compactness::oscillation_experiment;
use mhd_lab::constitutive::{check_admissible, validate_hypotheses, AdmissibilityCandidate, SamplingSpec};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::Path;

fn to_py(e: CliError) -> PyErr {
    match e {
        CliError::Config(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn scenario(text: &str, overrides: Vec<String>) -> PyResult<Scenario> {
    cli::parse_document(text, &overrides, Path::new(".")).map_err(to_py)
}

/// Fully resolved TOML of a scenario document.
#[pyfunction]
#[pyo3(signature = (text, overrides = Vec::new()))]
fn resolve_scenario(text: &str, overrides: Vec<String>) -> PyResult<String> {
    Ok(scenario(text, overrides)?.resolved_toml())
}

/// `(inequality, passed)` for every structural hypothesis on the standard
/// law with the given constants.
#[pyfunction]
#[pyo3(signature = (gamma = 5.0 / 3.0, alpha = 3.0, nu = 1.0, transport_scale = 0.1))]
fn check_hypotheses(gamma: f64, alpha: f64, nu: f64, transport_scale: f64) -> PyResult<Vec<(String, bool)>> {
    let s = Scenario { law: LawSpec::Standard { gamma, alpha, nu, transport_scale }, ..Scenario::default() };
    let law = s.law().map_err(to_py)?;
    let report = validate_hypotheses(&law, &SamplingSpec::default());
    Ok(report.checks.iter().filter(|c| !c.informational).map(|c| (c.inequality.to_string(), c.passed)).collect())
}

/// Whether `(1+θ)^{-ω}` is an admissible renormalizer.
#[pyfunction]
fn is_admissible(omega: f64) -> bool {
    check_admissible(AdmissibilityCandidate::Omega(omega)).admissible
}

/// Runs a scenario into `out_dir` and returns a summary dictionary.
#[pyfunction]
#[pyo3(signature = (text, out_dir, overrides = Vec::new()))]
fn run<'py>(py: Python<'py>, text: &str, out_dir: &str, overrides: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let mut s = scenario(text, overrides)?;
    s.output = out_dir.into();
    cli::prepare_output(&s, &s.output).map_err(to_py)?;
    let outcome = cli::execute(&s, &s.output).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("steps", outcome.trajectory.steps)?;
    d.set_item("records", outcome.records.len())?;
    d.set_item("completed", outcome.trajectory.completed())?;
    d.set_item("time_average_artificial_pressure", outcome.time_average())?;
    d.set_item("energy_residual", outcome.energy.as_ref().map(|e| e.total.residual))?;
    d.set_item("mass", outcome.records.iter().map(|r| r.mass).collect::<Vec<_>>())?;
    d.set_item("verdict", outcome.verdict().err().map(|e| e.to_string()))?;
    Ok(d)
}

/// Rows `(n, d1, d2, commutator_norm)` of the oscillation experiment.
#[pyfunction]
#[pyo3(signature = (text = "", overrides = Vec::new()))]
fn compactness_table(text: &str, overrides: Vec<String>) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let s = scenario(text, overrides)?;
    let law = s.law().map_err(to_py)?;
    let table =
        oscillation_experiment(&s.compactness, &law, &s.scheme).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(table.rows.iter().map(|r| (r.n, r.d1, r.d2, r.commutator_norm)).collect())
}

#[pymodule]
fn mhd_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(resolve_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(check_hypotheses, m)?)?;
    m.add_function(wrap_pyfunction!(is_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compactness_table, m)?)?;
    Ok(())
}
