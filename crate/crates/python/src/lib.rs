//! Python module `ltlab`: grids, potentials, spectra and the inequality checks.
//!
//! Reports come back as small classes with read-only attributes and a
//! `to_json()` method producing the same JSON as the command line.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ltlab_core::constants as lc;
use ltlab_core::extremal::{self, Objective, SearchFamily, SearchSpace};
use ltlab_core::ltcheck;
use ltlab_core::report::to_json;
use ltlab_core::sobolev;

/// Maps input errors to `ValueError` and numerical failures to `RuntimeError`.
pub fn to_py_err(e: ltlab_core::Error) -> PyErr {
    use ltlab_core::Error::*;
    match e {
        InvalidArgument(_) | NotPsd { .. } | Json(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    to_json(value).map_err(to_py_err)
}

/// Search family from its command-line name.
pub fn parse_family(name: &str) -> Result<SearchFamily, ltlab_core::Error> {
    match name {
        "pt" | "poschl_teller" => Ok(SearchFamily::PoschlTeller),
        "gaussian_well" => Ok(SearchFamily::GaussianWell),
        "two_gaussian" => Ok(SearchFamily::TwoGaussian),
        "square_well" => Ok(SearchFamily::SquareWell),
        other => Err(ltlab_core::Error::InvalidArgument(format!("unknown family {other:?}"))),
    }
}

#[pyclass(name = "Grid", module = "ltlab", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(ltlab_core::Grid);

#[pymethods]
impl PyGrid {
    /// Uniform grid on `[-half_width, half_width]` with spacing close to `spacing`.
    #[new]
    #[pyo3(signature = (half_width=20.0, spacing=0.01))]
    fn new(half_width: f64, spacing: f64) -> PyResult<Self> {
        ltlab_core::Grid::with_spacing(half_width, spacing).map(Self).map_err(to_py_err)
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes()
    }

    fn weights(&self) -> Vec<f64> {
        self.0.weights()
    }

    fn refined(&self) -> Self {
        Self(self.0.refined())
    }

    fn integrate(&self, values: Vec<f64>) -> PyResult<f64> {
        if values.len() != self.0.len() {
            return Err(PyValueError::new_err(format!("expected {} values, got {}", self.0.len(), values.len())));
        }
        Ok(self.0.integrate(&values))
    }

    fn __repr__(&self) -> String {
        format!("Grid(half_width={}, spacing={}, n={})", self.0.half_width(), self.0.spacing(), self.0.len())
    }
}

#[pyclass(name = "PotentialSpec", module = "ltlab", frozen, from_py_object)]
#[derive(Clone)]
struct PySpec(ltlab_core::PotentialSpec);

#[pymethods]
impl PySpec {
    #[staticmethod]
    #[pyo3(signature = (s, b=1.0))]
    fn poschl_teller(s: f64, b: f64) -> PyResult<Self> {
        Self::checked(ltlab_core::PotentialSpec::PoschlTeller { s, b })
    }

    #[staticmethod]
    fn square_well(depth: f64, width: f64) -> PyResult<Self> {
        Self::checked(ltlab_core::PotentialSpec::SquareWell { depth, width })
    }

    #[staticmethod]
    #[pyo3(signature = (amplitude, width, center=0.0))]
    fn gaussian_well(amplitude: f64, width: f64, center: f64) -> PyResult<Self> {
        Self::checked(ltlab_core::PotentialSpec::GaussianWell { amplitude, width, center })
    }

    /// Block-diagonal direct sum.
    #[staticmethod]
    fn matrix_diagonal(blocks: Vec<PySpec>) -> PyResult<Self> {
        Self::checked(ltlab_core::PotentialSpec::MatrixDiagonal { blocks: blocks.into_iter().map(|b| b.0).collect() })
    }

    /// Seeded random `M x M` PSD Gaussian mixture with `bumps` terms.
    #[staticmethod]
    #[pyo3(signature = (channels, bumps=3, seed=0))]
    fn random_psd(channels: usize, bumps: usize, seed: u64) -> PyResult<Self> {
        ltlab_core::random_psd_potential(channels, bumps, seed).map(Self).map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ltlab_core::PotentialSpec::from_json_str(text).map(Self).map_err(to_py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels()
    }

    /// Scalar value at `x`; `None` for matrix-valued potentials.
    fn value(&self, x: f64) -> Option<f64> {
        self.0.scalar_value(x)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("PotentialSpec({})", self.0.to_json_string())
    }
}

impl PySpec {
    fn checked(spec: ltlab_core::PotentialSpec) -> PyResult<Self> {
        spec.validate().map_err(to_py_err)?;
        Ok(Self(spec))
    }
}

#[pyclass(name = "Spectrum", module = "ltlab", frozen)]
struct PySpectrum(ltlab_core::Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn negatives(&self) -> Vec<f64> {
        self.0.negatives.clone()
    }

    #[getter]
    fn error_estimates(&self) -> Vec<f64> {
        self.0.error_estimates.clone()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn riesz_mean(&self, gamma: f64) -> PyResult<f64> {
        ltlab_core::riesz_mean(&self.0, gamma).map_err(to_py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.0)
    }
}

#[pyclass(name = "LtReport", module = "ltlab", frozen)]
struct PyLtReport(ltcheck::LtReport);

#[pymethods]
impl PyLtReport {
    #[getter]
    fn d(&self) -> u32 {
        self.0.d
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }
    #[getter]
    fn lhs(&self) -> f64 {
        self.0.lhs
    }
    #[getter]
    fn lhs_safeguarded(&self) -> f64 {
        self.0.lhs_safeguarded
    }
    #[getter]
    fn rhs_integral(&self) -> f64 {
        self.0.rhs_integral
    }
    #[getter]
    fn constant(&self) -> f64 {
        self.0.constant
    }
    #[getter]
    fn ratio(&self) -> f64 {
        self.0.ratio
    }
    #[getter]
    fn passed(&self) -> bool {
        self.0.pass
    }
    #[getter]
    fn bound_states(&self) -> usize {
        self.0.bound_states
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "LtReport(d={}, gamma={}, ratio={:.7}, constant={:.7}, passed={})",
            self.0.d,
            self.0.gamma,
            self.0.ratio,
            self.0.constant,
            if self.0.pass { "True" } else { "False" }
        )
    }
}

#[pyclass(name = "SearchResult", module = "ltlab", frozen)]
struct PySearchResult(extremal::SearchResult);

#[pymethods]
impl PySearchResult {
    #[getter]
    fn best_params(&self) -> Vec<f64> {
        self.0.best_params.clone()
    }
    #[getter]
    fn best_ratio(&self) -> f64 {
        self.0.best_ratio
    }
    #[getter]
    fn evaluations(&self) -> usize {
        self.0.evaluations
    }
    /// `(params, ratio)` per evaluation; `ratio` is `None` for rejected points.
    #[getter]
    fn trace(&self) -> Vec<(Vec<f64>, Option<f64>)> {
        self.0.trace.iter().map(|e| (e.params.clone(), e.ratio)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.0)
    }
}

/// Negative eigenvalues, extrapolated from `h` and `h/2`.
#[pyfunction]
#[pyo3(signature = (spec, grid, eps_cut=1e-6))]
fn spectrum(py: Python<'_>, spec: &PySpec, grid: &PyGrid, eps_cut: f64) -> PyResult<PySpectrum> {
    let (spec, grid) = (spec.0.clone(), grid.0);
    py.detach(|| ltlab_core::converged_spectrum(&spec, &grid, eps_cut, false)).map(PySpectrum).map_err(to_py_err)
}

/// One-dimensional Lieb-Thirring check for `gamma >= 1`.
#[pyfunction]
#[pyo3(signature = (spec, grid, gamma=1.0))]
fn check(py: Python<'_>, spec: &PySpec, grid: &PyGrid, gamma: f64) -> PyResult<PyLtReport> {
    let (spec, grid) = (spec.0.clone(), grid.0);
    py.detach(|| ltcheck::check_lt_1d(&spec, &grid, gamma)).map(PyLtReport).map_err(to_py_err)
}

/// Two-dimensional check for `V(x1, x2) = v1(x1) + v2(x2)`.
#[pyfunction]
#[pyo3(signature = (spec1, spec2, grid, gamma=1.0))]
fn check_separable(py: Python<'_>, spec1: &PySpec, spec2: &PySpec, grid: &PyGrid, gamma: f64) -> PyResult<PyLtReport> {
    let (a, b, grid) = (spec1.0.clone(), spec2.0.clone(), grid.0);
    py.detach(|| ltcheck::check_theorem2_separable(&a, &b, gamma, &grid)).map(PyLtReport).map_err(to_py_err)
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = json(value)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyfunction]
fn holder_step<'py>(py: Python<'py>, spec: &PySpec, grid: &PyGrid) -> PyResult<Bound<'py, PyAny>> {
    let (spec, g) = (spec.0.clone(), grid.0);
    let r = py.detach(|| ltcheck::check_holder_step(&spec, &g)).map_err(to_py_err)?;
    to_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, grid, tolerance=1e-5))]
fn energy_identity<'py>(py: Python<'py>, spec: &PySpec, grid: &PyGrid, tolerance: f64) -> PyResult<Bound<'py, PyAny>> {
    let (spec, g) = (spec.0.clone(), grid.0);
    let r = py.detach(|| ltcheck::check_energy_identity(&spec, &g, tolerance)).map_err(to_py_err)?;
    to_dict(py, &r)
}

#[pyfunction]
fn al_eigenvalue_identity<'py>(py: Python<'py>, lam: f64, gamma: f64, sigma: f64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &ltcheck::al_eigenvalue_identity(lam, gamma, sigma).map_err(to_py_err)?)
}

#[pyfunction]
fn al_potential_identity<'py>(py: Python<'py>, spec: &PySpec, gamma: f64, grid: &PyGrid) -> PyResult<Bound<'py, PyAny>> {
    let (spec, g) = (spec.0.clone(), grid.0);
    let r = py.detach(|| ltcheck::al_potential_identity(&spec, gamma, &g)).map_err(to_py_err)?;
    to_dict(py, &r)
}

/// Matrix Sobolev check on `n` seeded random orthonormal functions with `channels` components.
#[pyfunction]
#[pyo3(signature = (grid, n, channels=1, seed=0))]
fn sobolev_random<'py>(py: Python<'py>, grid: &PyGrid, n: usize, channels: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let g = grid.0;
    let r = py
        .detach(|| sobolev::random_system(&g, n, channels, seed).map(|s| sobolev::check_sobolev(&s)))
        .map_err(to_py_err)?;
    to_dict(py, &r)
}

/// Semiclassical constant `L^cl_{d,gamma}`.
#[pyfunction]
#[pyo3(signature = (d, gamma, quadrature=false))]
fn lt_classical(d: u32, gamma: f64, quadrature: bool) -> PyResult<f64> {
    if quadrature { lc::lt_classical_quadrature(d, gamma) } else { lc::lt_classical(d, gamma) }.map_err(to_py_err)
}

#[pyfunction]
fn constants<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let n = lc::named_constants();
    let d = PyDict::new(py);
    d.set_item("c_thm1", n.c_thm1)?;
    d.set_item("c_keller", n.c_keller)?;
    d.set_item("R", n.r)?;
    d.set_item("twice_lcl_1_1", n.twice_lcl_1_1)?;
    Ok(d)
}

/// Minimizer and minimum of `X - a X^{1/3}` over `X >= 0`, as `(x_star, min_value)`.
#[pyfunction]
fn keller_minimize(a: f64) -> PyResult<(f64, f64)> {
    lc::keller_minimize(a).map(|k| (k.x_star, k.min_value)).map_err(to_py_err)
}

fn objective(family: &str, lower: Vec<f64>, upper: Vec<f64>, gamma: f64, grid: &PyGrid) -> PyResult<Objective> {
    let space = SearchSpace::new(parse_family(family).map_err(to_py_err)?, lower, upper, gamma).map_err(to_py_err)?;
    Objective::new(space, grid.0).map_err(to_py_err)
}

/// Lattice sweep of a potential family.
#[pyfunction]
#[pyo3(signature = (family, lower, upper, grid, points=11, gamma=1.0))]
fn sweep(
    py: Python<'_>,
    family: &str,
    lower: Vec<f64>,
    upper: Vec<f64>,
    grid: &PyGrid,
    points: usize,
    gamma: f64,
) -> PyResult<PySearchResult> {
    let obj = objective(family, lower, upper, gamma, grid)?;
    py.detach(|| extremal::sweep(&obj, points)).map(PySearchResult).map_err(to_py_err)
}

/// Nelder-Mead maximization of the ratio from `start`.
#[pyfunction]
#[pyo3(signature = (family, lower, upper, start, grid, budget=200, gamma=1.0))]
#[allow(clippy::too_many_arguments)]
fn nelder_mead(
    py: Python<'_>,
    family: &str,
    lower: Vec<f64>,
    upper: Vec<f64>,
    start: Vec<f64>,
    grid: &PyGrid,
    budget: usize,
    gamma: f64,
) -> PyResult<PySearchResult> {
    let obj = objective(family, lower, upper, gamma, grid)?;
    py.detach(|| extremal::nelder_mead(&obj, &start, budget)).map(PySearchResult).map_err(to_py_err)
}

#[pymodule]
fn ltlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PySpec>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyLtReport>()?;
    m.add_class::<PySearchResult>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(check_separable, m)?)?;
    m.add_function(wrap_pyfunction!(holder_step, m)?)?;
    m.add_function(wrap_pyfunction!(energy_identity, m)?)?;
    m.add_function(wrap_pyfunction!(al_eigenvalue_identity, m)?)?;
    m.add_function(wrap_pyfunction!(al_potential_identity, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_random, m)?)?;
    m.add_function(wrap_pyfunction!(lt_classical, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(keller_minimize, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(nelder_mead, m)?)?;
    Ok(())
}
