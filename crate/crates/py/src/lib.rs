//! Python bindings for `pfmc_core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pfmc_core::config::RunConfig;
use pfmc_core::diagnostics::{record, DiagnosticsRecord};
use pfmc_core::runner::{execute, prepare, write_outputs, PreparedRun};
use pfmc_core::{oracles, verify, Error};

fn py_err(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e {
        Error::Io(_) | Error::Csv(_) | Error::PhiBound { .. } | Error::NonFinite { .. } => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn record_dict<'py>(py: Python<'py>, r: &DiagnosticsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("mu_total", r.mu_total)?;
    d.set_item("xi_max", r.xi_max)?;
    d.set_item("xi_l1", r.xi_l1)?;
    d.set_item("D_t", r.d_t)?;
    d.set_item("dissipation", r.dissipation)?;
    d.set_item("f_l2", r.f_l2)?;
    d.set_item("w_max", r.w_max)?;
    d.set_item("interface_radius", r.interface_radius)?;
    d.set_item("phi_margin", r.phi_margin)?;
    Ok(d)
}

/// A prepared run that can be stepped from Python.
#[pyclass(unsendable)]
struct Simulation {
    run: PreparedRun,
}

#[pymethods]
impl Simulation {
    #[new]
    fn new(config: &str) -> PyResult<Self> {
        let cfg = RunConfig::from_toml(config).map_err(py_err)?;
        Ok(Simulation { run: prepare(&cfg).map_err(py_err)? })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.run.state.t
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.run.state.eps
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.run.state.dt
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        let g = self.run.state.phi.grid();
        vec![g.n(); g.dim()]
    }

    /// Advances `steps` time steps.
    #[pyo3(signature = (steps = 1))]
    fn step(&mut self, steps: u64) -> PyResult<()> {
        for _ in 0..steps {
            self.run.state.step().map_err(py_err)?;
        }
        Ok(())
    }

    /// Flat row-major copy of `phi`.
    fn phi(&self) -> Vec<f64> {
        self.run.state.phi.data.clone()
    }

    fn record<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        record_dict(py, &record(&self.run.state, &self.run.diag).map_err(py_err)?)
    }
}

/// Runs a TOML config to completion and returns the diagnostics rows.
/// Output files are written when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (config, out_dir = None))]
fn run<'py>(py: Python<'py>, config: &str, out_dir: Option<&str>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = RunConfig::from_toml(config).map_err(py_err)?;
    let mut prep = prepare(&cfg).map_err(py_err)?;
    let out = execute(&mut prep).map_err(py_err)?;
    if let Some(dir) = out_dir {
        write_outputs(&out, &prep, std::path::Path::new(dir)).map_err(py_err)?;
    }
    out.records.iter().map(|r| record_dict(py, r)).collect()
}

/// Runs a config with the energy trace on and evaluates the invariant
/// suite. Returns `(pass, [(name, pass, margin, detail), ...])`.
#[pyfunction]
fn verify_config(config: &str) -> PyResult<(bool, Vec<(String, bool, f64, String)>)> {
    let mut cfg = RunConfig::from_toml(config).map_err(py_err)?;
    cfg.diagnostics.energy_trace = true;
    let mut prep = prepare(&cfg).map_err(py_err)?;
    let out = execute(&mut prep).map_err(py_err)?;
    let rep = verify::verify(&out, &prep, &cfg.tolerances).map_err(py_err)?;
    Ok((rep.pass, rep.checks.into_iter().map(|c| (c.name, c.pass, c.margin, c.detail)).collect()))
}

#[pyfunction]
fn sigma() -> f64 {
    pfmc_core::make_standard_potential().sigma
}

#[pyfunction]
fn traveling_wave_speed(u: Vec<f64>, g: f64, nu: Vec<f64>) -> PyResult<f64> {
    oracles::traveling_wave_speed(&u, g, &nu).map_err(py_err)
}

#[pyfunction]
fn sphere_radius(r0: f64, g: f64, d: usize, t: f64) -> PyResult<f64> {
    oracles::sphere_radius(r0, g, d, t).map_err(py_err)
}

#[pymodule]
fn pfmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify_config, m)?)?;
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(traveling_wave_speed, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_radius, m)?)?;
    Ok(())
}
