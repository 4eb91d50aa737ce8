//! Python bindings. Every entry point returns the same JSON report the CLI writes.

use std::collections::HashMap;

use nullgeom::cli::commands::{self, Suite, DEFAULT_EPSILONS};
use nullgeom::cli::{self as ngcli, RunConfig};
use nullgeom::GeomError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: GeomError) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn config(
    surface: &str,
    metric: Option<String>,
    grid: Option<String>,
    tolerances: Option<HashMap<String, f64>>,
    seed: u64,
    max_points: Option<usize>,
) -> PyResult<RunConfig> {
    let mut cfg =
        RunConfig { surface: Some(surface.to_string()), metric, grid, seed, max_points, ..RunConfig::default() };
    if let Some(t) = tolerances {
        let mut v = serde_json::to_value(cfg.tolerances).expect("tolerances serialize");
        let fields = v.as_object_mut().expect("tolerances are a map");
        for (k, x) in t {
            if !fields.contains_key(&k) {
                return Err(PyValueError::new_err(format!("unknown tolerance `{k}`")));
            }
            fields.insert(k, x.into());
        }
        cfg.tolerances = serde_json::from_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Frame, shape and trapped-class pipeline with a horizon verdict; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (surface, metric=None, grid=None, tolerances=None, seed=0))]
fn analyze(
    surface: &str,
    metric: Option<String>,
    grid: Option<String>,
    tolerances: Option<HashMap<String, f64>>,
    seed: u64,
) -> PyResult<String> {
    let cfg = config(surface, metric, grid, tolerances, seed, None)?;
    Ok(commands::analyze(&cfg).map_err(to_py)?.to_json())
}

/// Runs one residual suite (`raychaudhuri`, `codazzi`, `rigging`, `umbilic`, `monge-oracle`, `variation`).
#[pyfunction]
#[pyo3(signature = (surface, suite, metric=None, grid=None, tolerances=None, seed=0, max_points=None))]
fn verify(
    surface: &str,
    suite: &str,
    metric: Option<String>,
    grid: Option<String>,
    tolerances: Option<HashMap<String, f64>>,
    seed: u64,
    max_points: Option<usize>,
) -> PyResult<String> {
    let suite: Suite = serde_json::from_value(suite.into())
        .map_err(|_| PyValueError::new_err(format!("unknown suite `{suite}`")))?;
    let cfg = config(surface, metric, grid, tolerances, seed, max_points)?;
    Ok(commands::verify(&cfg, suite).map_err(to_py)?.to_json())
}

/// Drags one leaf along the rigging; returns `(report_json, csv)`.
#[pyfunction]
#[pyo3(signature = (surface, eps=None, leaf=None, metric=None, grid=None))]
fn drag(
    surface: &str,
    eps: Option<Vec<f64>>,
    leaf: Option<f64>,
    metric: Option<String>,
    grid: Option<String>,
) -> PyResult<(String, String)> {
    let cfg = config(surface, metric, grid, None, 0, None)?;
    let eps = eps.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    let (report, result) = commands::drag(&cfg, &eps, leaf).map_err(to_py)?;
    Ok((report.to_json(), result.to_csv()))
}

/// Runs the command line with `argv` (without the program name) and returns its exit code.
#[pyfunction]
fn main(argv: Vec<String>) -> u8 {
    ngcli::run_from(std::iter::once("nullgeom".to_string()).chain(argv))
}

#[pymodule]
fn nullgeom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA", ngcli::SCHEMA)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(drag, m)?)?;
    m.add_function(wrap_pyfunction!(main, m)?)?;
    Ok(())
}
