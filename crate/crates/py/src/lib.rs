//! Python bindings. Matrices cross the boundary as lists of rows of Python
//! `complex`; probability vectors as lists of `float`.

use num_complex::Complex64;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;

use qst_core as core;
use qst_core::random::derive_seed;
use qst_core::{ComplexMatrix, IntermediateState};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    let d = m.dim();
    (0..d)
        .map(|r| (0..d).map(|c| m[(r, c)]).collect())
        .collect()
}

/// A matrix argument: either a `DensityMatrix` or a list of rows.
#[derive(FromPyObject)]
enum MatrixArg {
    State(DensityMatrix),
    Rows(Vec<Vec<Complex64>>),
}

impl MatrixArg {
    fn into_matrix(self) -> PyResult<ComplexMatrix> {
        match self {
            MatrixArg::State(s) => Ok(s.0.into_matrix()),
            MatrixArg::Rows(r) => ComplexMatrix::from_rows(r).map_err(err),
        }
    }
}

/// Validated density matrix: Hermitian, unit trace, positive semidefinite.
#[pyclass(module = "qst", from_py_object)]
#[derive(Clone)]
struct DensityMatrix(core::DensityMatrix);

#[pymethods]
impl DensityMatrix {
    #[new]
    #[pyo3(signature = (rows, tol = 1e-9))]
    fn new(rows: Vec<Vec<Complex64>>, tol: f64) -> PyResult<Self> {
        let m = ComplexMatrix::from_rows(rows).map_err(err)?;
        core::validate_state(&m, tol).map(Self).map_err(err)
    }

    /// |ψ⟩⟨ψ| for a normalized state vector.
    #[staticmethod]
    fn from_pure(psi: Vec<Complex64>) -> PyResult<Self> {
        core::DensityMatrix::from_pure(&psi).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("state serializes")
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        rows(self.0.matrix())
    }

    fn purity(&self) -> f64 {
        core::purity(&self.0)
    }

    /// Eigenvalues in descending order.
    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        core::hermitian_eig(self.0.matrix())
            .map(|e| e.eigenvalues)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "DensityMatrix(dim={}, purity={:.6})",
            self.0.dim(),
            core::purity(&self.0)
        )
    }
}

/// Projective observable: orthonormal eigenbasis (columns) and distinct labels.
#[pyclass(module = "qst", from_py_object)]
#[derive(Clone)]
struct Observable(core::Observable);

#[pymethods]
impl Observable {
    #[new]
    #[pyo3(signature = (basis, eigenvalues = None))]
    fn new(basis: Vec<Vec<Complex64>>, eigenvalues: Option<Vec<f64>>) -> PyResult<Self> {
        let u = ComplexMatrix::from_rows(basis).map_err(err)?;
        match eigenvalues {
            Some(l) => core::Observable::new(u, l),
            None => core::Observable::from_basis(u),
        }
        .map(Self)
        .map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    /// Eigenbasis as rows of the unitary whose columns are the eigenvectors.
    fn basis(&self) -> Vec<Vec<Complex64>> {
        rows(self.0.basis())
    }

    fn projector(&self, j: usize) -> PyResult<Vec<Vec<Complex64>>> {
        self.0.projector(j).map(|p| rows(&p)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Observable(dim={}, eigenvalues={:?})",
            self.0.dim(),
            self.0.eigenvalues()
        )
    }
}

/// Ordered list of observables sharing one dimension.
#[pyclass(module = "qst", from_py_object)]
#[derive(Clone)]
struct ObservableSet(core::ObservableSet);

#[pymethods]
impl ObservableSet {
    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn family(&self) -> String {
        serde_json::to_value(self.0.family())
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }

    fn observables(&self) -> Vec<Observable> {
        self.0.iter().cloned().map(Observable).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __getitem__(&self, i: usize) -> PyResult<Observable> {
        self.0
            .observables()
            .get(i)
            .cloned()
            .map(Observable)
            .ok_or_else(|| PyIndexError::new_err(format!("index {i} out of range")))
    }

    fn __repr__(&self) -> String {
        format!(
            "ObservableSet(dim={}, len={}, family={})",
            self.0.dim(),
            self.0.len(),
            self.family()
        )
    }
}

/// An observable with its measured outcome distribution.
#[pyclass(module = "qst", from_py_object)]
#[derive(Clone)]
struct MeasurementRecord(core::MeasurementRecord);

#[pymethods]
impl MeasurementRecord {
    #[new]
    #[pyo3(signature = (observable, probabilities, shots = None))]
    fn new(observable: Observable, probabilities: Vec<f64>, shots: Option<u64>) -> PyResult<Self> {
        core::MeasurementRecord::new(observable.0, probabilities, shots)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn observable(&self) -> Observable {
        Observable(self.0.observable().clone())
    }

    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.0.probabilities().to_vec()
    }

    #[getter]
    fn shots(&self) -> Option<u64> {
        self.0.shots()
    }

    fn __repr__(&self) -> String {
        format!(
            "MeasurementRecord(p={:?}, shots={:?})",
            self.0.probabilities(),
            self.0.shots()
        )
    }
}

/// Outcome of an iterative reconstruction run.
#[pyclass(module = "qst")]
struct ReconstructionResult(core::ReconstructionResult);

#[pymethods]
impl ReconstructionResult {
    #[getter]
    fn estimate(&self) -> DensityMatrix {
        DensityMatrix(self.0.estimate.clone())
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    /// "DistributionalTol", "StepTol" or "MaxSweeps".
    #[getter]
    fn stop_reason(&self) -> String {
        format!("{:?}", self.0.stop_reason)
    }

    #[getter]
    fn sweeps(&self) -> usize {
        self.0.sweeps
    }

    #[getter]
    fn projected(&self) -> bool {
        self.0.projected
    }

    #[getter]
    fn final_distributional(&self) -> f64 {
        self.0.final_distributional()
    }

    /// Distributional distance after each sweep.
    fn distributional_trace(&self) -> Vec<f64> {
        self.0.trace.rows.iter().map(|r| r.distributional).collect()
    }

    fn trace_csv(&self) -> String {
        self.0.trace.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "ReconstructionResult(stop_reason={:?}, sweeps={}, distributional={:.3e})",
            self.0.stop_reason,
            self.0.sweeps,
            self.0.final_distributional()
        )
    }
}

fn records_vec(records: Vec<MeasurementRecord>) -> Vec<core::MeasurementRecord> {
    records.into_iter().map(|r| r.0).collect()
}

fn intermediate(m: MatrixArg) -> PyResult<IntermediateState> {
    IntermediateState::new(m.into_matrix()?).map_err(err)
}

#[pyfunction]
fn random_pure_state(d: usize, seed: u64) -> PyResult<DensityMatrix> {
    core::random_pure_state(d, seed)
        .map(DensityMatrix)
        .map_err(err)
}

#[pyfunction]
fn random_mixed_state(d: usize, rank: usize, seed: u64) -> PyResult<DensityMatrix> {
    core::random_mixed_state(d, rank, seed)
        .map(DensityMatrix)
        .map_err(err)
}

#[pyfunction]
fn born_probabilities(rho: &DensityMatrix, obs: &Observable) -> PyResult<Vec<f64>> {
    core::born_probabilities(&rho.0, &obs.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (rho, observables, shots = None, seed = 0))]
fn record_set(
    rho: &DensityMatrix,
    observables: &ObservableSet,
    shots: Option<u64>,
    seed: u64,
) -> PyResult<Vec<MeasurementRecord>> {
    core::record_set(&rho.0, &observables.0, shots, seed)
        .map(|v| v.into_iter().map(MeasurementRecord).collect())
        .map_err(err)
}

/// Replace the statistics of `sigma` in the eigenbasis of `obs` by `p`.
/// Returns the (Hermitian, unit-trace, not necessarily PSD) result as rows.
#[pyfunction]
fn impose(obs: &Observable, p: Vec<f64>, sigma: MatrixArg) -> PyResult<Vec<Vec<Complex64>>> {
    let out = core::impose(&obs.0, &p, &intermediate(sigma)?).map_err(err)?;
    Ok(rows(out.matrix()))
}

#[pyfunction]
fn impose_rank(
    obs: &Observable,
    p: Vec<f64>,
    sigma: MatrixArg,
    rank: usize,
) -> PyResult<Vec<Vec<Complex64>>> {
    let out = core::impose_rank(&obs.0, &p, &intermediate(sigma)?, rank).map_err(err)?;
    Ok(rows(out.matrix()))
}

#[pyfunction]
fn impose_pure(obs: &Observable, p: Vec<f64>, psi: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    core::impose_pure(&obs.0, &p, &psi).map_err(err)
}

fn config(
    max_sweeps: usize,
    tol_distributional: Option<f64>,
    tol_step: Option<f64>,
    rank: Option<usize>,
    psd_project: bool,
) -> core::IterationConfig {
    core::IterationConfig {
        max_sweeps,
        tol_distributional,
        tol_step,
        rank,
        final_psd_projection: psd_project,
    }
}

/// Iterate sweeps over `records` from a random pure state drawn from `seed`
/// (or from `seed_state` when given) until a stopping rule fires.
#[pyfunction]
#[pyo3(signature = (
    records, seed = 0, max_sweeps = 10_000, tol_distributional = Some(1e-10), tol_step = Some(1e-12),
    rank = None, psd_project = false, seed_state = None, reference = None
))]
#[allow(clippy::too_many_arguments)]
fn reconstruct(
    py: Python<'_>,
    records: Vec<MeasurementRecord>,
    seed: u64,
    max_sweeps: usize,
    tol_distributional: Option<f64>,
    tol_step: Option<f64>,
    rank: Option<usize>,
    psd_project: bool,
    seed_state: Option<DensityMatrix>,
    reference: Option<DensityMatrix>,
) -> PyResult<ReconstructionResult> {
    let recs = records_vec(records);
    let d = core::simulate::common_dim(&recs).map_err(err)?;
    let rho0 = match seed_state {
        Some(s) => s.0,
        None => core::random_pure_state(d, derive_seed(seed, 0)).map_err(err)?,
    };
    let cfg = config(max_sweeps, tol_distributional, tol_step, rank, psd_project);
    let reference = reference.map(|r| r.0);
    py.detach(|| core::reconstruct_with_reference(&recs, &rho0, &cfg, reference.as_ref()))
        .map(ReconstructionResult)
        .map_err(err)
}

/// Fraction of `n_seeds` random starting states whose run meets the
/// distributional tolerance.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (
    records, n_seeds, seed = 0, max_sweeps = 10_000, tol_distributional = Some(1e-10), tol_step = Some(1e-12),
    rank = None
))]
fn success_rate(
    py: Python<'_>,
    records: Vec<MeasurementRecord>,
    n_seeds: usize,
    seed: u64,
    max_sweeps: usize,
    tol_distributional: Option<f64>,
    tol_step: Option<f64>,
    rank: Option<usize>,
) -> PyResult<f64> {
    if n_seeds == 0 {
        return Err(PyValueError::new_err("n_seeds must be at least 1"));
    }
    let recs = records_vec(records);
    let cfg = config(max_sweeps, tol_distributional, tol_step, rank, false);
    cfg.validate(core::simulate::common_dim(&recs).map_err(err)?)
        .map_err(err)?;
    Ok(py.detach(|| core::success_rate(&recs, &cfg, n_seeds, seed)))
}

#[pyfunction]
fn baseline_estimate(records: Vec<MeasurementRecord>) -> PyResult<DensityMatrix> {
    core::baseline_estimate(&records_vec(records))
        .map(DensityMatrix)
        .map_err(err)
}

#[pyfunction]
fn hellinger(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    core::hellinger(&p, &q).map_err(err)
}

#[pyfunction]
fn distributional(ps: Vec<Vec<f64>>, qs: Vec<Vec<f64>>) -> PyResult<f64> {
    core::distributional(&ps, &qs).map_err(err)
}

#[pyfunction]
fn hs_distance(a: MatrixArg, b: MatrixArg) -> PyResult<f64> {
    core::hs_distance(&a.into_matrix()?, &b.into_matrix()?).map_err(err)
}

#[pyfunction]
fn mub_set(d: usize, m: usize) -> PyResult<ObservableSet> {
    core::mub_set(d, m).map(ObservableSet).map_err(err)
}

#[pyfunction]
fn pauli_set() -> ObservableSet {
    ObservableSet(core::pauli_set())
}

#[pyfunction]
fn random_observable_set(d: usize, m: usize, seed: u64) -> PyResult<ObservableSet> {
    core::random_observable_set(d, m, seed)
        .map(ObservableSet)
        .map_err(err)
}

#[pymodule]
fn qst(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DensityMatrix>()?;
    m.add_class::<Observable>()?;
    m.add_class::<ObservableSet>()?;
    m.add_class::<MeasurementRecord>()?;
    m.add_class::<ReconstructionResult>()?;
    m.add_function(wrap_pyfunction!(random_pure_state, m)?)?;
    m.add_function(wrap_pyfunction!(random_mixed_state, m)?)?;
    m.add_function(wrap_pyfunction!(born_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(record_set, m)?)?;
    m.add_function(wrap_pyfunction!(impose, m)?)?;
    m.add_function(wrap_pyfunction!(impose_rank, m)?)?;
    m.add_function(wrap_pyfunction!(impose_pure, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(success_rate, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(distributional, m)?)?;
    m.add_function(wrap_pyfunction!(hs_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mub_set, m)?)?;
    m.add_function(wrap_pyfunction!(pauli_set, m)?)?;
    m.add_function(wrap_pyfunction!(random_observable_set, m)?)?;
    Ok(())
}
