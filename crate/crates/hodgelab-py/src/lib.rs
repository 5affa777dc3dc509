//! Python bindings for the spectral toolkit: mesh generation, Hodge
//! Laplacian spectra, Betti numbers, heat kernels and the exponent checks.

use hodgelab::analysis::{
    fit_exponent, verify_gradient_lemma, verify_heat_decay, verify_weyl, HeatKernelEvaluator,
};
use hodgelab::complex::{generate_flat_torus, generate_icosphere, validate, SimplicialComplex};
use hodgelab::dec::{hodge_laplacian, pointwise_gradient_norm, pointwise_value_norm, StarScheme};
use hodgelab::eigen::{
    kernel_dimension, solve_all_dense, solve_lowest, KernelStrategy, SolverConfig,
    SpectralDecomposition,
};
use hodgelab::oracle;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_scheme(name: &str) -> PyResult<StarScheme> {
    name.parse().map_err(value_err)
}

/// Oriented simplicial mesh of a model manifold.
#[pyclass(name = "Mesh")]
struct Mesh {
    inner: SimplicialComplex,
}

#[pymethods]
impl Mesh {
    /// Triangulated flat torus `(R/period Z)^dim` for dim 1, 2 or 3.
    #[staticmethod]
    #[pyo3(signature = (dim, resolution, period = std::f64::consts::TAU))]
    fn flat_torus(dim: usize, resolution: usize, period: f64) -> PyResult<Self> {
        Ok(Self {
            inner: generate_flat_torus(dim, resolution, period).map_err(value_err)?,
        })
    }

    /// Icosahedron subdivided `level` times, projected to the unit sphere.
    #[staticmethod]
    fn icosphere(level: usize) -> PyResult<Self> {
        Ok(Self {
            inner: generate_icosphere(level).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: SimplicialComplex::load_json(&path).map_err(runtime_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_json(&path).map_err(runtime_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.metadata().volume
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.metadata().name.to_string()
    }

    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn simplex_count(&self, degree: usize) -> PyResult<usize> {
        if degree > self.inner.dim() {
            return Err(value_err(format!(
                "degree {degree} out of range for dimension {}",
                self.inner.dim()
            )));
        }
        Ok(self.inner.simplex_count(degree))
    }

    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    /// Structural checks as a dict: pass, dd_zero, closed_manifold,
    /// well_centered, euler_characteristic, min_quality, violations.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = validate(&self.inner);
        let out = PyDict::new(py);
        out.set_item("pass", report.pass)?;
        out.set_item("dd_zero", report.dd_zero)?;
        out.set_item("closed_manifold", report.closed_manifold)?;
        out.set_item("well_centered", report.well_centered)?;
        out.set_item("euler_characteristic", report.euler_characteristic)?;
        out.set_item("min_quality", report.min_quality)?;
        out.set_item("violations", report.violations)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh({}, vertices={}, chi={})",
            self.inner.metadata().name,
            self.inner.vertex_count(),
            self.inner.euler_characteristic()
        )
    }
}

/// Sorted eigenvalues with M-orthonormal eigencochains at a fixed degree.
#[pyclass(name = "Spectrum")]
struct Spectrum {
    inner: SpectralDecomposition,
    mass: Vec<f64>,
    manifold_dim: usize,
}

#[pymethods]
impl Spectrum {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    fn eigencochain(&self, index: usize) -> PyResult<Vec<f64>> {
        if index >= self.inner.count() {
            return Err(value_err(format!("index {index} out of range")));
        }
        Ok(self.inner.eigencochain(index).iter().copied().collect())
    }

    /// Number of numerically zero eigenvalues (the Betti number of the
    /// degree when enough pairs were computed).
    fn kernel_dimension(&self) -> PyResult<usize> {
        kernel_dimension(&self.inner, KernelStrategy::Gap).map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Spectrum(degree={}, count={}, lambda_max={:.6})",
            self.inner.degree,
            self.inner.count(),
            self.inner.eigenvalues.last().copied().unwrap_or(0.0)
        )
    }
}

/// Solve the Hodge Laplacian eigenproblem on a mesh.
#[pyfunction]
#[pyo3(signature = (mesh, degree = 0, count = 10, tol = 1e-8, scheme = "barycentric", seed = 0, dense = false))]
fn solve(
    mesh: &Mesh,
    degree: usize,
    count: usize,
    tol: f64,
    scheme: &str,
    seed: u64,
    dense: bool,
) -> PyResult<Spectrum> {
    let scheme = parse_scheme(scheme)?;
    let pair = hodge_laplacian(&mesh.inner, degree, scheme).map_err(runtime_err)?;
    let inner = if dense {
        solve_all_dense(&pair).map_err(runtime_err)?
    } else {
        let config = SolverConfig::new(count).with_tol(tol).with_seed(seed);
        solve_lowest(&pair, &config).map_err(runtime_err)?
    };
    Ok(Spectrum {
        inner,
        mass: pair.mass,
        manifold_dim: mesh.inner.dim(),
    })
}

/// Betti number of a degree, via the kernel of its Hodge Laplacian.
#[pyfunction]
#[pyo3(signature = (mesh, degree, count = 8, tol = 1e-8, seed = 0))]
fn betti(mesh: &Mesh, degree: usize, count: usize, tol: f64, seed: u64) -> PyResult<usize> {
    let spectrum = solve(mesh, degree, count, tol, "barycentric", seed, false)?;
    spectrum.kernel_dimension()
}

/// Pointwise norm of a p-cochain recovered at vertices (p = 0 or 1).
#[pyfunction]
fn value_norm(mesh: &Mesh, degree: usize, cochain: Vec<f64>) -> PyResult<Vec<f64>> {
    pointwise_value_norm(&mesh.inner, degree, &cochain).map_err(value_err)
}

/// Per-vertex norm of the P1 gradient of a scalar cochain.
#[pyfunction]
fn gradient_norm(mesh: &Mesh, cochain: Vec<f64>) -> PyResult<Vec<f64>> {
    pointwise_gradient_norm(&mesh.inner, &cochain).map_err(value_err)
}

/// Log-log slope fit; returns (slope, intercept, r_squared).
#[pyfunction]
fn fit_slope(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if xs.is_empty() {
        return Err(value_err("empty data"));
    }
    let fit = fit_exponent(&xs, &ys, (0, xs.len() - 1)).map_err(value_err)?;
    Ok((fit.slope, fit.intercept, fit.r_squared))
}

/// Eigenvalue growth check; returns a dict with slope, c_inv and pass.
#[pyfunction]
#[pyo3(signature = (spectrum, betti, slope_tol = 0.1))]
fn weyl_check<'py>(
    py: Python<'py>,
    spectrum: &Spectrum,
    betti: usize,
    slope_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report = verify_weyl(
        &spectrum.inner,
        spectrum.manifold_dim,
        betti,
        None,
        slope_tol,
    )
    .map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("slope", report.fit.slope)?;
    out.set_item("expected_slope", report.expected_slope)?;
    out.set_item("r_squared", report.fit.r_squared)?;
    out.set_item("c_inv", report.c_inv_empirical)?;
    out.set_item("pass", report.pass)?;
    Ok(out)
}

/// Gradient inequality check for combinations of eigenfunctions.
#[pyfunction]
#[pyo3(signature = (mesh, spectrum, k, trials = 100, seed = 0, tol_disc = 0.05))]
fn lemma_check<'py>(
    py: Python<'py>,
    mesh: &Mesh,
    spectrum: &Spectrum,
    k: usize,
    trials: usize,
    seed: u64,
    tol_disc: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report = verify_gradient_lemma(&spectrum.inner, &mesh.inner, k, trials, seed, tol_disc)
        .map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("max_rho", report.max_rho)?;
    out.set_item("max_rho_random", report.max_rho_random)?;
    out.set_item("max_rho_extremal", report.max_rho_extremal)?;
    out.set_item("a", report.a)?;
    out.set_item("pass", report.pass)?;
    Ok(out)
}

/// Diagonal heat-kernel decay fit over a time grid.
#[pyfunction]
#[pyo3(signature = (mesh, spectrum, ts, slope_tol = 0.15))]
fn heat_decay_check<'py>(
    py: Python<'py>,
    mesh: &Mesh,
    spectrum: &Spectrum,
    ts: Vec<f64>,
    slope_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let betti = kernel_dimension(&spectrum.inner, KernelStrategy::Gap).map_err(runtime_err)?;
    let evaluator =
        HeatKernelEvaluator::new(&spectrum.inner, &mesh.inner, betti).map_err(runtime_err)?;
    let report = verify_heat_decay(&evaluator, &ts, slope_tol).map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("slope", report.fit.slope)?;
    out.set_item("expected_slope", report.expected_slope)?;
    out.set_item("max_tail_fraction", report.max_tail_fraction)?;
    out.set_item("pass", report.pass)?;
    Ok(out)
}

/// Heat kernel entry H(x, y, t) from a spectrum.
#[pyfunction]
fn heat_kernel(mesh: &Mesh, spectrum: &Spectrum, x: usize, y: usize, t: f64) -> PyResult<f64> {
    if t <= 0.0 {
        return Err(value_err("t must be positive"));
    }
    let betti = kernel_dimension(&spectrum.inner, KernelStrategy::Gap).map_err(runtime_err)?;
    let evaluator =
        HeatKernelEvaluator::new(&spectrum.inner, &mesh.inner, betti).map_err(runtime_err)?;
    if x >= spectrum.inner.dim() || y >= spectrum.inner.dim() {
        return Err(value_err("vertex index out of range"));
    }
    Ok(evaluator.kernel(x, y, t))
}

/// Mass (star) diagonal of the degree the spectrum was computed at.
#[pyfunction]
fn mass_diagonal(spectrum: &Spectrum) -> Vec<f64> {
    spectrum.mass.clone()
}

/// Analytic torus spectrum as (eigenvalue, multiplicity) pairs.
#[pyfunction]
#[pyo3(signature = (dim, count, period = std::f64::consts::TAU, degree = 0))]
fn torus_spectrum(
    dim: usize,
    count: usize,
    period: f64,
    degree: usize,
) -> PyResult<Vec<(f64, usize)>> {
    Ok(oracle::torus_spectrum(dim, period, count, degree)
        .map_err(value_err)?
        .levels)
}

/// Analytic sphere spectrum as (eigenvalue, multiplicity) pairs.
#[pyfunction]
#[pyo3(signature = (count, degree = 0))]
fn sphere_spectrum(count: usize, degree: usize) -> PyResult<Vec<(f64, usize)>> {
    Ok(oracle::sphere_spectrum(count, degree)
        .map_err(value_err)?
        .levels)
}

/// Wrapped-Gaussian heat kernel of the circle.
#[pyfunction]
#[pyo3(signature = (x, y, t, period = std::f64::consts::TAU))]
fn circle_heat_kernel(x: f64, y: f64, t: f64, period: f64) -> PyResult<f64> {
    oracle::circle_heat_kernel(x, y, t, period).map_err(value_err)
}

#[pymodule]
fn hodgelab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mesh>()?;
    m.add_class::<Spectrum>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(betti, m)?)?;
    m.add_function(wrap_pyfunction!(value_norm, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_norm, m)?)?;
    m.add_function(wrap_pyfunction!(fit_slope, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_check, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_check, m)?)?;
    m.add_function(wrap_pyfunction!(heat_decay_check, m)?)?;
    m.add_function(wrap_pyfunction!(heat_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(mass_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(torus_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(circle_heat_kernel, m)?)?;
    Ok(())
}
