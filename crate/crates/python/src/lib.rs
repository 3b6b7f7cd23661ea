use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use sadmm_core::diagnostics::rate_slope as core_rate_slope;
use sadmm_core::harness::{check, run, ExperimentConfig, HarnessError};
use sadmm_core::model::soft_threshold as core_soft_threshold;
use sadmm_core::solvers::{solve as core_solve, SolverKind, ThetaSchedule};

create_exception!(sadmm, SadmmError, PyException);

fn to_py(err: impl std::fmt::Display) -> PyErr {
    SadmmError::new_err(err.to_string())
}

fn config(text: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_json(text).map_err(|e: HarnessError| PyValueError::new_err(e.to_string()))
}

/// Runs an experiment described by a JSON config and returns the manifest as JSON.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir=None))]
fn run_experiment(py: Python<'_>, config_json: &str, out_dir: Option<PathBuf>) -> PyResult<String> {
    let cfg = config(config_json)?;
    let summary = py.detach(|| run(&cfg, out_dir.as_deref())).map_err(to_py)?;
    serde_json::to_string(&summary.manifest).map_err(to_py)
}

/// Runs the diagnostics suite and returns the report as JSON.
#[pyfunction]
fn check_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = config(config_json)?;
    let report = py.detach(|| check(&cfg)).map_err(to_py)?;
    Ok(report.to_json())
}

/// Solves the configured problem with one solver and seed.
///
/// Returns `(x1, x2, trace_csv)` for the output point `x̂`.
#[pyfunction]
fn solve(py: Python<'_>, config_json: &str, solver: &str, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>, String)> {
    let cfg = config(config_json)?;
    let kind: SolverKind = solver.parse().map_err(|e| PyValueError::new_err(format!("{e}")))?;
    let spec = cfg
        .solvers
        .iter()
        .map(|s| s.spec())
        .find(|s| s.name == kind)
        .unwrap_or_else(|| sadmm_core::harness::SolverSpec { name: kind, ..Default::default() });
    let sol = py
        .detach(|| -> Result<_, HarnessError> {
            let built = cfg.build_problem()?;
            let opts = cfg.solver_options(&spec, built.problem.n(), seed);
            Ok(core_solve(kind, &built.problem, &opts)?)
        })
        .map_err(to_py)?;
    Ok((sol.x_hat.x1.to_vec(), sol.x_hat.x2.to_vec(), sol.trace.to_csv()))
}

#[pyfunction]
fn soft_threshold(v: Vec<f64>, t: f64) -> PyResult<Vec<f64>> {
    core_soft_threshold(&v, t).map(|x| x.to_vec()).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// `(θ1,s, θ2)` of the ACC-SADMM schedule.
#[pyfunction]
fn theta(c: f64, tau: f64, m: usize, s: usize) -> PyResult<(f64, f64)> {
    let schedule = ThetaSchedule::new(c, tau, m).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(schedule.theta(s))
}

/// Least-squares slope of `log v` against `log S`.
#[pyfunction]
fn rate_slope(points: Vec<(f64, f64)>) -> PyResult<f64> {
    core_rate_slope(&points).map(|f| f.slope).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn sadmm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SadmmError", m.py().get_type::<SadmmError>())?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(check_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(soft_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(rate_slope, m)?)?;
    Ok(())
}
