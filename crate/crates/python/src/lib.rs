//! Python bindings.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crncalc::analysis::estimate_limit;
use crncalc::compiler::{compile_str, CircuitInstance, CompileOptions, Decls, LogSystem};
use crncalc::crn::{write_network, write_ode};
use crncalc::library::catalog;
use crncalc::sim::{integrate, IntegratorConfig, Trajectory};
use crncalc::verify::{run_checks, select, VerifyOptions};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A compiled circuit.
#[pyclass(frozen)]
struct Circuit {
    inner: CircuitInstance,
}

impl Circuit {
    fn run(&self, values: BTreeMap<String, f64>, t_end: Option<f64>, oracle: bool) -> PyResult<Trajectory> {
        let init = self.inner.resolve_init(&values).map_err(value_err)?;
        let mut cfg = if oracle { IntegratorConfig::oracle() } else { IntegratorConfig::default() };
        if let Some(t) = t_end {
            cfg = cfg.t_end(t);
        }
        cfg.validate().map_err(value_err)?;
        integrate(&self.inner.ode, &init, &cfg).map_err(runtime_err)
    }
}

#[pymethods]
impl Circuit {
    #[getter]
    fn title(&self) -> String {
        self.inner.title.clone()
    }

    #[getter]
    fn species(&self) -> Vec<String> {
        self.inner.ode.variables().iter().map(|s| s.to_string()).collect()
    }

    #[getter]
    fn inputs(&self) -> Vec<String> {
        self.inner.inputs.iter().map(|b| b.name.clone()).collect()
    }

    #[getter]
    fn realizable(&self) -> bool {
        self.inner.ode.is_mass_action_realizable().realizable
    }

    fn flags(&self) -> BTreeMap<&'static str, bool> {
        let f = self.inner.flags();
        BTreeMap::from([
            ("chemistry", f.chemistry),
            ("mass_action", f.mass_action),
            ("full_domain", f.full_domain),
            ("bounded_time", f.bounded_time),
        ])
    }

    fn rate_formula(&self) -> String {
        self.inner.rate_formula()
    }

    #[pyo3(signature = (input_rate=f64::INFINITY))]
    fn predicted_rate(&self, input_rate: f64) -> f64 {
        self.inner.predicted_rate(input_rate)
    }

    /// Reaction listing, or ODE text when `format` is "ode".
    #[pyo3(signature = (format="crn"))]
    fn export(&self, format: &str) -> PyResult<String> {
        match format {
            "crn" => Ok(write_network(&self.inner.network().map_err(value_err)?, &self.inner.title)),
            "ode" => Ok(write_ode(&self.inner.ode, &self.inner.title)),
            other => Err(PyValueError::new_err(format!("unknown format `{other}`"))),
        }
    }

    /// Returns `(times, outputs)`.
    #[pyo3(signature = (values=BTreeMap::new(), t_end=None, oracle=false))]
    fn simulate(
        &self,
        values: BTreeMap<String, f64>,
        t_end: Option<f64>,
        oracle: bool,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let traj = self.run(values, t_end, oracle)?;
        let out = (0..traj.len()).map(|k| traj.output_value(&self.inner.output, k)).collect();
        Ok((traj.times, out))
    }

    #[pyo3(signature = (values=BTreeMap::new(), t_end=None, oracle=false))]
    fn limit(&self, values: BTreeMap<String, f64>, t_end: Option<f64>, oracle: bool) -> PyResult<f64> {
        let traj = self.run(values, t_end, oracle)?;
        estimate_limit(&traj, &self.inner.output).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!("Circuit({:?}, {} species)", self.inner.title, self.inner.ode.variables().len())
    }
}

/// Compiles an expression; `inputs` holds declarations such as "a:real".
#[pyfunction]
#[pyo3(signature = (expr, inputs=Vec::new(), log_system=None))]
fn compile(expr: &str, inputs: Vec<String>, log_system: Option<&str>) -> PyResult<Circuit> {
    let decls = Decls::parse(&inputs).map_err(value_err)?;
    let log_system = log_system.map(|s| s.parse::<LogSystem>()).transpose().map_err(value_err)?;
    let opts = CompileOptions { log_system, ..CompileOptions::default() };
    let inner = compile_str(expr, &decls, &opts).map_err(value_err)?;
    Ok(Circuit { inner })
}

/// Loads a catalog module by name.
#[pyfunction]
fn module(name: &str) -> PyResult<Circuit> {
    catalog()
        .into_iter()
        .find(|s| s.kind.name() == name)
        .map(|s| Circuit { inner: CircuitInstance::from_module(&s) })
        .ok_or_else(|| PyValueError::new_err(format!("unknown module `{name}`")))
}

#[pyfunction]
fn module_names() -> Vec<String> {
    catalog().iter().map(|s| s.kind.name()).collect()
}

/// Runs verification checks; returns `(name, passed, detail)` triples.
#[pyfunction]
#[pyo3(signature = (selector="all", quick=true))]
fn verify(py: Python<'_>, selector: &str, quick: bool) -> PyResult<Vec<(String, bool, String)>> {
    let checks = select(selector).map_err(PyValueError::new_err)?;
    let results = py.detach(|| run_checks(&checks, &VerifyOptions { quick }));
    Ok(results.into_iter().map(|r| (r.name.to_string(), r.passed, r.detail)).collect())
}

#[pymodule]
fn pycrncalc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Circuit>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(module, m)?)?;
    m.add_function(wrap_pyfunction!(module_names, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
