//! Python bindings: load a scenario document, run any policy, and inspect
//! the per-slot records, plus direct access to the split and cost formulas.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fogflow_core::{
    compute_split, monthly_cost, run_simulation, sample_instance, CostModel, Decision,
    IterationRecord, ScenarioFile,
};

/// One simulated slot.
#[pyclass(name = "Record")]
struct PyRecord {
    #[pyo3(get)]
    slot: usize,
    #[pyo3(get)]
    requests: u64,
    #[pyo3(get)]
    processing_s: f64,
    #[pyo3(get)]
    completion_s: f64,
    #[pyo3(get)]
    decision: String,
    #[pyo3(get)]
    active_arrays: Vec<String>,
    #[pyo3(get)]
    split: BTreeMap<String, f64>,
    #[pyo3(get)]
    public_cost: f64,
    #[pyo3(get)]
    noise_region: Option<String>,
    #[pyo3(get)]
    noise_mips: f64,
    #[pyo3(get)]
    saturated: bool,
}

#[pymethods]
impl PyRecord {
    fn __repr__(&self) -> String {
        format!(
            "Record(slot={}, requests={}, completion_s={}, decision='{}', cost={})",
            self.slot, self.requests, self.completion_s, self.decision, self.public_cost
        )
    }
}

impl From<&IterationRecord> for PyRecord {
    fn from(r: &IterationRecord) -> Self {
        PyRecord {
            slot: r.slot,
            requests: r.requests,
            processing_s: r.processing_s,
            completion_s: r.completion_s,
            decision: match r.decision {
                Decision::Activate => "activate".into(),
                Decision::Deactivate => "deactivate".into(),
                Decision::None => "none".into(),
            },
            active_arrays: r.active_arrays.clone(),
            split: r.split.fractions.clone(),
            public_cost: r.public_cost,
            noise_region: r.noise_region.clone(),
            noise_mips: r.noise_mips,
            saturated: r.saturated,
        }
    }
}

/// A loaded scenario document.
#[pyclass(name = "Scenario")]
struct PyScenario {
    file: ScenarioFile,
}

#[pymethods]
impl PyScenario {
    /// Parse a scenario from its JSON text.
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        let file =
            ScenarioFile::from_json(json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { file })
    }

    /// Load a scenario from a file path.
    #[staticmethod]
    fn from_path(path: &str) -> PyResult<Self> {
        let file = ScenarioFile::load(std::path::Path::new(path))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { file })
    }

    /// Names of the policies the scenario configures.
    fn policies(&self) -> Vec<String> {
        self.file
            .policies
            .iter()
            .map(|p| p.name().to_string())
            .collect()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.file.seed
    }

    #[getter]
    fn max_completion_s(&self) -> f64 {
        self.file.max_completion_s()
    }

    /// Run one policy and return the per-slot records.
    #[pyo3(signature = (policy, seed=None))]
    fn run(&self, policy: &str, seed: Option<u64>) -> PyResult<Vec<PyRecord>> {
        let configs = self
            .file
            .configs(seed)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let cfg = configs
            .into_iter()
            .find(|c| c.policy.name() == policy)
            .ok_or_else(|| PyValueError::new_err(format!("policy '{policy}' not in scenario")))?;
        let result = run_simulation(&cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(result.records.iter().map(PyRecord::from).collect())
    }
}

/// Residual-proportional traffic split over the given hosts.
#[pyfunction(name = "compute_split")]
fn py_compute_split(
    active_hosts: Vec<String>,
    residuals: BTreeMap<String, f64>,
) -> PyResult<BTreeMap<String, f64>> {
    let split = compute_split(&active_hosts, &residuals)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(split.fractions)
}

/// Monthly pay-per-use projection of the public requests of one simulation.
#[pyfunction(name = "monthly_cost")]
#[pyo3(signature = (
    public_requests,
    price_per_gb_s = 0.0000195172,
    memory_mb = 1024.0,
    duration_s = 1.0,
    periods_per_month = 360.0
))]
fn py_monthly_cost(
    public_requests: f64,
    price_per_gb_s: f64,
    memory_mb: f64,
    duration_s: f64,
    periods_per_month: f64,
) -> f64 {
    let cost_model = CostModel {
        per_microservice_unit_cost: 1.0,
        aws_price_per_gb_s: price_per_gb_s,
        aws_memory_mb: memory_mb,
        aws_duration_s: duration_s,
        periods_per_month,
    };
    monthly_cost(public_requests, &cost_model)
}

/// Sample a topology and application within the default ranges; returns the
/// instance fragment as JSON.
#[pyfunction(name = "sample_instance_json")]
fn py_sample_instance_json(seed: u64) -> PyResult<String> {
    let fragment = sample_instance(&fogflow_core::default_ranges(), seed)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    serde_json::to_string_pretty(&fragment).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[pymodule]
fn fogflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRecord>()?;
    m.add_function(wrap_pyfunction!(py_compute_split, m)?)?;
    m.add_function(wrap_pyfunction!(py_monthly_cost, m)?)?;
    m.add_function(wrap_pyfunction!(py_sample_instance_json, m)?)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    Ok(())
}
