//! Python bindings for the qutrit tomography pipeline.
//!
//! Matrices cross the boundary as lists of rows, so `numpy.array(x)` works on
//! every returned matrix and any nested sequence of floats is accepted.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qutrit_gpt::experiment::{self, counts_to_frequencies, simulate_train_test};
use qutrit_gpt::geometry::{self, JnrKind};
use qutrit_gpt::lowrank_fit;
use qutrit_gpt::qutrit_ref::{self, BlochEffectVector, BlochStateVector};
use qutrit_gpt::rng::{derive_seed, substream, tag};
use qutrit_gpt::{
    Design, DesignKind, Error, FitOptions, FitReport, FrequencyMatrix, GaugeResult, GptModel, HPolytope,
    Projection3D, SimulationParams, VPolytope,
};

type Rows = Vec<Vec<f64>>;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Numerical(_) | Error::Consistency(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

pub fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    qutrit_gpt::io::from_rows(rows).map_err(PyValueError::new_err)
}

fn mask_rows(m: &DMatrix<bool>) -> Vec<Vec<bool>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn mask_from_rows(rows: &[Vec<bool>]) -> PyResult<DMatrix<bool>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("ragged mask rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn array<const N: usize>(v: &[f64], what: &str) -> PyResult<[f64; N]> {
    v.try_into()
        .map_err(|_| PyValueError::new_err(format!("{what} needs {N} components, got {}", v.len())))
}

fn options(seed: u64, max_iters: Option<usize>, n_restarts: Option<usize>) -> FitOptions {
    let d = FitOptions::default();
    FitOptions {
        seed,
        max_iters: max_iters.unwrap_or(d.max_iters),
        n_restarts: n_restarts.unwrap_or(d.n_restarts),
        ..d
    }
}

// -- reference model --------------------------------------------------------

/// Bloch vector `(1, s_1..s_8)` of a density matrix given as 3×3 rows of
/// `(re, im)` pairs.
#[pyfunction]
fn state_to_bloch(rho: [[[f64; 2]; 3]; 3]) -> PyResult<Vec<f64>> {
    let op = qutrit_ref::HermitianOp3::from_pairs(&rho).map_err(py_err)?;
    Ok(qutrit_ref::state_to_bloch(&op).map_err(py_err)?.components().to_vec())
}

#[pyfunction]
fn effect_to_bloch(q: [[[f64; 2]; 3]; 3]) -> PyResult<Vec<f64>> {
    let op = qutrit_ref::HermitianOp3::from_pairs(&q).map_err(py_err)?;
    Ok(qutrit_ref::effect_to_bloch(&op).components().to_vec())
}

#[pyfunction]
fn bloch_to_state(s: Vec<f64>) -> PyResult<[[[f64; 2]; 3]; 3]> {
    let v = BlochStateVector::new(array(&s, "state vector")?).map_err(py_err)?;
    Ok(qutrit_ref::bloch_to_state(&v).to_pairs())
}

#[pyfunction]
fn bloch_to_effect(e: Vec<f64>) -> PyResult<[[[f64; 2]; 3]; 3]> {
    let v = BlochEffectVector::new(array(&e, "effect vector")?);
    Ok(qutrit_ref::bloch_to_effect(&v).to_pairs())
}

/// Whether a 9-component state vector with leading 1 is a density matrix.
#[pyfunction]
#[pyo3(signature = (s, tol = 1e-9))]
fn is_valid_state_vector(s: Vec<f64>, tol: f64) -> PyResult<bool> {
    let v = BlochStateVector::new(array(&s, "state vector")?).map_err(py_err)?;
    Ok(qutrit_ref::is_valid_state_vector(&v, tol))
}

#[pyfunction]
#[pyo3(signature = (e, tol = 1e-9))]
fn is_valid_effect_vector(e: Vec<f64>, tol: f64) -> PyResult<bool> {
    let v = BlochEffectVector::new(array(&e, "effect vector")?);
    Ok(qutrit_ref::is_valid_effect_vector(&v, tol))
}

#[pyfunction]
fn pure_state_norm() -> f64 {
    qutrit_ref::pure_state_norm()
}

/// Symmetric structure constant `g_{αβγ}` for indices in `1..=8`.
#[pyfunction]
fn structure_constant(alpha: usize, beta: usize, gamma: usize) -> PyResult<f64> {
    if ![alpha, beta, gamma].iter().all(|i| (1..=8).contains(i)) {
        return Err(PyValueError::new_err("indices must lie in 1..=8"));
    }
    Ok(qutrit_ref::structure_constants().g(alpha, beta, gamma))
}

// -- experiment -------------------------------------------------------------

#[pyclass(name = "Design", module = "qutrit_gpt_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyDesign {
    pub inner: Design,
}

#[pymethods]
impl PyDesign {
    /// `m` Haar pure states against `n` Haar effects, every pair probed.
    #[staticmethod]
    #[pyo3(signature = (m, n, seed = 0))]
    fn haar(m: usize, n: usize, seed: u64) -> PyResult<Self> {
        let inner = experiment::build_design(&DesignKind::Haar { m, n }, &mut substream(seed, &[tag::DESIGN]))
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    /// The 15 fiducial states and effects plus `n_random` Haar ones, with the
    /// random block left unprobed.
    #[staticmethod]
    #[pyo3(signature = (n_random, seed = 0))]
    fn fiducial(n_random: usize, seed: u64) -> PyResult<Self> {
        let kind = DesignKind::Fiducial { n_random };
        let inner = experiment::build_design(&kind, &mut substream(seed, &[tag::DESIGN])).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(text).map_err(json_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.describe()
    }

    #[getter]
    fn n_preparations(&self) -> usize {
        self.inner.n_preparations()
    }

    #[getter]
    fn n_measurements(&self) -> usize {
        self.inner.n_measurements()
    }

    #[getter]
    fn mask(&self) -> Vec<Vec<bool>> {
        mask_rows(&self.inner.mask)
    }

    /// Rows `(1, s̃)` of the preparations.
    fn state_vectors(&self) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.state_vectors().map_err(py_err)?))
    }

    /// Columns are the unit effect followed by the measurement effects.
    fn effect_vectors(&self) -> Rows {
        to_rows(&self.inner.effect_vectors())
    }

    #[pyo3(signature = (epsilon = 0.0))]
    fn probabilities(&self, epsilon: f64) -> Rows {
        to_rows(&self.inner.probabilities(epsilon))
    }

    fn __repr__(&self) -> String {
        format!("Design({})", self.inner.kind.describe())
    }
}

#[pyclass(name = "FrequencyMatrix", module = "qutrit_gpt_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyFrequencyMatrix {
    pub inner: FrequencyMatrix,
}

#[pymethods]
impl PyFrequencyMatrix {
    /// Noiseless data: `probabilities` with a uniform `sigma` on probed cells.
    #[staticmethod]
    fn from_probabilities(probabilities: Rows, sigma: f64, mask: Vec<Vec<bool>>) -> PyResult<Self> {
        let p = from_rows(&probabilities)?;
        let inner = FrequencyMatrix::from_probabilities(&p, sigma, &mask_from_rows(&mask)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn f(&self) -> Rows {
        to_rows(&self.inner.f)
    }

    /// Zero on the unit column and infinite on unprobed cells.
    #[getter]
    fn sigma(&self) -> Rows {
        to_rows(&self.inner.sigma)
    }

    #[getter]
    fn mask(&self) -> Vec<Vec<bool>> {
        mask_rows(&self.inner.mask)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.f.shape()
    }

    fn probed_cells(&self) -> usize {
        self.inner.probed_cells()
    }

    fn __repr__(&self) -> String {
        let (m, n) = self.inner.f.shape();
        format!("FrequencyMatrix({m}x{n}, {} probed)", self.inner.probed_cells())
    }
}

/// Poisson counts for two independent runs, returned as (train, test)
/// frequency matrices.
#[pyfunction]
#[pyo3(signature = (design, seed = 0, rate = 2000.0, exposure = 2.0, epsilon = 0.01))]
fn simulate(
    py: Python<'_>,
    design: &PyDesign,
    seed: u64,
    rate: f64,
    exposure: f64,
    epsilon: f64,
) -> PyResult<(PyFrequencyMatrix, PyFrequencyMatrix)> {
    let params = SimulationParams { rate, exposure, epsilon };
    let d = &design.inner;
    py.detach(|| {
        let (a, b) = simulate_train_test(d, &params, seed)?;
        Ok((counts_to_frequencies(&a, d)?, counts_to_frequencies(&b, d)?))
    })
    .map(|(a, b)| (PyFrequencyMatrix { inner: a }, PyFrequencyMatrix { inner: b }))
    .map_err(py_err)
}

// -- fitting ----------------------------------------------------------------

#[pyclass(name = "GptModel", module = "qutrit_gpt_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyGptModel {
    pub inner: GptModel,
}

#[pymethods]
impl PyGptModel {
    #[new]
    fn new(s: Rows, e: Rows) -> PyResult<Self> {
        Ok(Self { inner: GptModel::new(from_rows(&s)?, from_rows(&e)?).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(text).map_err(json_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank
    }

    #[getter]
    fn s(&self) -> Rows {
        to_rows(&self.inner.s)
    }

    #[getter]
    fn e(&self) -> Rows {
        to_rows(&self.inner.e)
    }

    fn predictions(&self) -> Rows {
        to_rows(&self.inner.predictions())
    }

    /// Largest distance of a prediction outside `[0, 1]`.
    fn bound_violation(&self) -> f64 {
        self.inner.bound_violation()
    }

    fn unit_violation(&self) -> f64 {
        self.inner.unit_violation()
    }

    fn __repr__(&self) -> String {
        format!("GptModel(rank={}, m={})", self.inner.rank, self.inner.s.nrows())
    }
}

#[pyclass(name = "FitReport", module = "qutrit_gpt_py", skip_from_py_object, get_all)]
#[derive(Clone)]
pub struct PyFitReport {
    pub rank: usize,
    pub chi2_train: f64,
    pub chi2_test: Option<f64>,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

impl From<FitReport> for PyFitReport {
    fn from(r: FitReport) -> Self {
        Self {
            rank: r.rank,
            chi2_train: r.chi2_train,
            chi2_test: r.chi2_test,
            iterations: r.iterations,
            restarts_used: r.restarts_used,
            converged: r.converged,
            history: r.history,
        }
    }
}

#[pymethods]
impl PyFitReport {
    fn __repr__(&self) -> String {
        format!(
            "FitReport(rank={}, chi2_train={:.6}, chi2_test={:?}, converged={})",
            self.rank, self.chi2_train, self.chi2_test, self.converged
        )
    }
}

#[pyfunction]
#[pyo3(signature = (train, k, seed = 0, max_iters = None, n_restarts = None))]
fn fit_rank_k(
    py: Python<'_>,
    train: &PyFrequencyMatrix,
    k: usize,
    seed: u64,
    max_iters: Option<usize>,
    n_restarts: Option<usize>,
) -> PyResult<(PyGptModel, PyFitReport)> {
    let opts = options(seed, max_iters, n_restarts);
    let (model, report) = py.detach(|| lowrank_fit::fit_rank_k(&train.inner, k, &opts)).map_err(py_err)?;
    Ok((PyGptModel { inner: model }, report.into()))
}

#[pyfunction]
fn testing_error(model: &PyGptModel, test: &PyFrequencyMatrix) -> PyResult<f64> {
    lowrank_fit::testing_error(&model.inner, &test.inner).map_err(py_err)
}

/// Fits each rank on `train`, scores it on `test`, and returns
/// `(reports, models, selected_rank)`.
#[pyfunction]
#[pyo3(signature = (train, test, ranks, seed = 0, max_iters = None, n_restarts = None))]
fn rank_sweep(
    py: Python<'_>,
    train: &PyFrequencyMatrix,
    test: &PyFrequencyMatrix,
    ranks: Vec<usize>,
    seed: u64,
    max_iters: Option<usize>,
    n_restarts: Option<usize>,
) -> PyResult<(Vec<PyFitReport>, Vec<PyGptModel>, usize)> {
    let opts = options(seed, max_iters, n_restarts);
    let sweep = py
        .detach(|| lowrank_fit::rank_sweep(&train.inner, &test.inner, &ranks, &opts))
        .map_err(py_err)?;
    Ok((
        sweep.reports.into_iter().map(Into::into).collect(),
        sweep.models.into_iter().map(|inner| PyGptModel { inner }).collect(),
        sweep.selected_rank,
    ))
}

/// Seed used by the command line for the fit stage of a run.
#[pyfunction]
fn fit_seed(seed: u64) -> u64 {
    derive_seed(seed, &[tag::RESTART])
}

// -- gauge ------------------------------------------------------------------

#[pyclass(name = "GaugeResult", module = "qutrit_gpt_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyGaugeResult {
    pub inner: GaugeResult,
}

#[pymethods]
impl PyGaugeResult {
    #[getter]
    fn lambda_(&self) -> Rows {
        to_rows(&self.inner.lambda)
    }

    #[getter]
    fn s_realized(&self) -> Rows {
        to_rows(&self.inner.s_realized)
    }

    #[getter]
    fn e_realized(&self) -> Rows {
        to_rows(&self.inner.e_realized)
    }

    #[getter]
    fn chi2_alignment(&self) -> f64 {
        self.inner.chi2_alignment
    }

    #[getter]
    fn condition_number(&self) -> f64 {
        self.inner.condition_number
    }

    /// Realized factors rescaled so state rows start with 1 and the first
    /// effect column is the unit effect.
    fn normalized(&self) -> PyResult<(Rows, Rows)> {
        let (s, e) = qutrit_gpt::cli::normalized_factors(&self.inner).map_err(py_err)?;
        Ok((to_rows(&s), to_rows(&e)))
    }
}

#[pyfunction]
fn gauge_fix(py: Python<'_>, d: Rows, k: usize, s_ref: Rows) -> PyResult<PyGaugeResult> {
    let (d, s_ref) = (from_rows(&d)?, from_rows(&s_ref)?);
    let inner = py.detach(|| qutrit_gpt::gauge::gauge_fix(&d, k, &s_ref)).map_err(py_err)?;
    Ok(PyGaugeResult { inner })
}

/// Mean and standard deviation of the residuals over non-unit columns.
#[pyfunction]
fn residual_stats(d_realized: Rows, d_reference: Rows) -> PyResult<(f64, f64)> {
    geometry::residual_stats(&from_rows(&d_realized)?, &from_rows(&d_reference)?).map_err(py_err)
}

// -- geometry ---------------------------------------------------------------

#[pyclass(name = "VPolytope", module = "qutrit_gpt_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyVPolytope {
    pub inner: VPolytope,
}

#[pymethods]
impl PyVPolytope {
    /// Hull of the state rows of `s_realized`.
    #[staticmethod]
    fn realized_states(s_realized: Rows) -> PyResult<Self> {
        Ok(Self { inner: geometry::realized_state_space(&from_rows(&s_realized)?).map_err(py_err)? })
    }

    /// Hull of the effect columns, their complements, zero and unit.
    #[staticmethod]
    fn realized_effects(e_realized: Rows) -> PyResult<Self> {
        Ok(Self { inner: geometry::realized_effect_space(&from_rows(&e_realized)?).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn vertices(&self) -> Rows {
        self.inner.vertices().iter().map(|v| v.iter().cloned().collect()).collect()
    }

    fn ray_shoot(&self, origin: Vec<f64>, direction: Vec<f64>) -> PyResult<f64> {
        geometry::ray_shoot_v(&self.inner, &origin.into(), &direction.into()).map_err(py_err)
    }

    fn project(&self, axes: [usize; 3]) -> PyResult<PyProjection> {
        Ok(PyProjection { inner: geometry::project_vpolytope(&self.inner, axes).map_err(py_err)? })
    }

    fn __repr__(&self) -> String {
        format!("VPolytope(dim={}, vertices={})", self.inner.dim(), self.inner.vertices().len())
    }
}

#[pyclass(name = "HPolytope", module = "qutrit_gpt_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyHPolytope {
    pub inner: HPolytope,
}

#[pymethods]
impl PyHPolytope {
    /// Normalized vectors giving valid probabilities on every effect column.
    #[staticmethod]
    fn consistent_states(e_realized: Rows) -> PyResult<Self> {
        Ok(Self { inner: geometry::consistent_state_space(&from_rows(&e_realized)?).map_err(py_err)? })
    }

    #[staticmethod]
    fn consistent_effects(s_realized: Rows) -> PyResult<Self> {
        Ok(Self { inner: geometry::consistent_effect_space(&from_rows(&s_realized)?).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[pyo3(signature = (x, tol = 1e-9))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> bool {
        self.inner.contains(&x.into(), tol)
    }

    /// `(min inequality slack, max equality residual)` at `x`.
    fn slack(&self, x: Vec<f64>) -> (f64, f64) {
        self.inner.slack(&x.into())
    }

    fn ray_shoot(&self, origin: Vec<f64>, direction: Vec<f64>) -> PyResult<f64> {
        geometry::ray_shoot_h(&self.inner, &origin.into(), &direction.into()).map_err(py_err)
    }

    #[pyo3(signature = (axes, n_dirs = 2000, seed = 0))]
    fn project(&self, py: Python<'_>, axes: [usize; 3], n_dirs: usize, seed: u64) -> PyResult<PyProjection> {
        let inner = py
            .detach(|| geometry::project_hpolytope(&self.inner, axes, n_dirs, seed))
            .map_err(py_err)?;
        Ok(PyProjection { inner })
    }

    fn __repr__(&self) -> String {
        format!("HPolytope(dim={})", self.inner.dim())
    }
}

/// Ray statistics between the realized and consistent state bodies, as a
/// dict with `mean`, `std`, `excluded`, `max_realized_norm`,
/// `min_consistent_norm`, `straddles` and per-ray `ratios`.
#[pyfunction]
#[pyo3(signature = (realized, consistent, n_rays = 1000, seed = 0))]
fn probe_rays<'py>(
    py: Python<'py>,
    realized: &PyVPolytope,
    consistent: &PyHPolytope,
    n_rays: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let rays = py
        .detach(|| geometry::probe_rays(&realized.inner, &consistent.inner, n_rays, seed))
        .map_err(py_err)?;
    let straddle = geometry::straddle_from_probes(&rays.probes);
    let summary = geometry::ratio_summary(rays);
    let out = PyDict::new(py);
    out.set_item("mean", summary.mean)?;
    out.set_item("std", summary.std)?;
    out.set_item("excluded", summary.rays.excluded)?;
    out.set_item("max_realized_norm", straddle.max_realized_norm)?;
    out.set_item("min_consistent_norm", straddle.min_consistent_norm)?;
    out.set_item("straddles", straddle.straddles)?;
    out.set_item("ratios", summary.rays.probes.iter().map(|p| p.ratio).collect::<Vec<_>>())?;
    Ok(out)
}

#[pyclass(name = "Projection3D", module = "qutrit_gpt_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyProjection {
    pub inner: Projection3D,
}

#[pymethods]
impl PyProjection {
    #[getter]
    fn axes(&self) -> [usize; 3] {
        self.inner.axes
    }

    #[getter]
    fn affine_dim(&self) -> usize {
        self.inner.affine_dim
    }

    #[getter]
    fn facets(&self) -> Vec<[usize; 3]> {
        self.inner.hull_facets.clone()
    }

    #[getter]
    fn points(&self) -> Vec<[f64; 3]> {
        self.inner.points.clone()
    }

    fn extreme_points(&self) -> Vec<[f64; 3]> {
        self.inner.extreme_points()
    }

    /// Volume, area or length according to the affine dimension.
    fn measure(&self) -> f64 {
        self.inner.measure()
    }

    /// Polygon cut by `coordinate[slot] = value`, counter-clockwise.
    #[pyo3(signature = (slot, value, tol = 1e-9))]
    fn section(&self, slot: usize, value: f64, tol: f64) -> PyResult<Vec<[f64; 2]>> {
        if slot > 2 {
            return Err(PyValueError::new_err("slot must be 0, 1 or 2"));
        }
        Ok(self.inner.section(slot, value, tol))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn to_ply(&self) -> String {
        self.inner.to_ply()
    }

    fn __repr__(&self) -> String {
        format!(
            "Projection3D(axes={:?}, vertices={}, dim={})",
            self.inner.axes,
            self.inner.hull_vertices.len(),
            self.inner.affine_dim
        )
    }
}

/// Hull of the joint numerical range of three reference operators over
/// `n_samples` Haar pure states; `kind` is `"state"` or `"effect"`.
#[pyfunction]
#[pyo3(signature = (kind, axes, n_samples = 10_000, seed = 0))]
fn sample_jnr(py: Python<'_>, kind: &str, axes: [usize; 3], n_samples: usize, seed: u64) -> PyResult<PyProjection> {
    let kind = match kind {
        "state" => JnrKind::State,
        "effect" => JnrKind::Effect,
        other => return Err(PyValueError::new_err(format!("unknown kind {other:?}"))),
    };
    let inner = py.detach(|| geometry::sample_jnr(kind, axes, n_samples, seed)).map_err(py_err)?;
    Ok(PyProjection { inner })
}

// -- command line -----------------------------------------------------------

/// Runs the command line with `args` (without the program name) and returns
/// its exit code.
#[pyfunction]
fn main(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| qutrit_gpt::cli::main_with_args(std::iter::once("qutrit-gpt".to_string()).chain(args)))
}

#[pymodule]
fn qutrit_gpt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDesign>()?;
    m.add_class::<PyFrequencyMatrix>()?;
    m.add_class::<PyGptModel>()?;
    m.add_class::<PyFitReport>()?;
    m.add_class::<PyGaugeResult>()?;
    m.add_class::<PyVPolytope>()?;
    m.add_class::<PyHPolytope>()?;
    m.add_class::<PyProjection>()?;
    m.add_function(wrap_pyfunction!(state_to_bloch, m)?)?;
    m.add_function(wrap_pyfunction!(effect_to_bloch, m)?)?;
    m.add_function(wrap_pyfunction!(bloch_to_state, m)?)?;
    m.add_function(wrap_pyfunction!(bloch_to_effect, m)?)?;
    m.add_function(wrap_pyfunction!(is_valid_state_vector, m)?)?;
    m.add_function(wrap_pyfunction!(is_valid_effect_vector, m)?)?;
    m.add_function(wrap_pyfunction!(pure_state_norm, m)?)?;
    m.add_function(wrap_pyfunction!(structure_constant, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rank_k, m)?)?;
    m.add_function(wrap_pyfunction!(testing_error, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_seed, m)?)?;
    m.add_function(wrap_pyfunction!(gauge_fix, m)?)?;
    m.add_function(wrap_pyfunction!(residual_stats, m)?)?;
    m.add_function(wrap_pyfunction!(probe_rays, m)?)?;
    m.add_function(wrap_pyfunction!(sample_jnr, m)?)?;
    m.add_function(wrap_pyfunction!(main, m)?)?;
    Ok(())
}
