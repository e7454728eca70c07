//! Python module `curvflow`. Structured results (certificates, reports,
//! traces) come back as plain dicts and lists.

use std::sync::Arc;

use curvflow::pseudoindex::{check_certificate, SplittingType};
use curvflow::quadric::{self, HoloTangent};
use curvflow::spectra::{self, HermitianMatrix};
use curvflow::sphere_mesh::{build_icosphere, SphereMesh};
use curvflow::ym_lattice::{self as ym, FlowConfig};
use curvflow::Complex64;
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: curvflow::Error) -> PyErr {
    use curvflow::Error::*;
    match e {
        BranchCut { .. } | StepFailure { .. } | DegreeQuantization { .. } | NoConvergence(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Serializes through JSON into native Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn hermitian(rows: Vec<Vec<Complex64>>) -> PyResult<HermitianMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(HermitianMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
}

/// Ascending eigenvalues of a Hermitian matrix given as nested lists.
#[pyfunction]
fn eigenvalues(matrix: Vec<Vec<Complex64>>) -> PyResult<Vec<f64>> {
    Ok(spectra::eigenvalues_ascending(&hermitian(matrix)?).map_err(err)?.eigenvalues)
}

/// Sum of the two smallest eigenvalues.
#[pyfunction]
fn lambda12(matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
    spectra::lambda12(&hermitian(matrix)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (values, epsilon = 0.0))]
fn classify_lambda12<'py>(py: Python<'py>, values: Vec<f64>, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &spectra::classify_lambda12_values(&values, epsilon).map_err(err)?)
}

/// `R(U,Ū,V,V̄)` on the hyperquadric for coordinate vectors `u`, `v`.
#[pyfunction]
fn bisectional_curvature(u: Vec<Complex64>, v: Vec<Complex64>) -> PyResult<f64> {
    let (u, v) = (HoloTangent::new(u).map_err(err)?, HoloTangent::new(v).map_err(err)?);
    quadric::bisectional_closed(&u, &v).map_err(err)
}

#[pyfunction]
fn orthogonal_ricci(u: Vec<Complex64>) -> PyResult<f64> {
    quadric::orthogonal_ricci(&HoloTangent::new(u).map_err(err)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, restarts = quadric::DEFAULT_RESTARTS, iters = quadric::DEFAULT_ITERS, seed = 0))]
fn certify_two_positivity<'py>(
    py: Python<'py>,
    n: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &quadric::certify_two_positivity(n, restarts, iters, seed).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (splitting, n, k = 0))]
fn degree_certificate<'py>(py: Python<'py>, splitting: Vec<i64>, n: usize, k: i64) -> PyResult<Bound<'py, PyAny>> {
    let st = SplittingType::new(splitting).map_err(err)?;
    to_py(py, &check_certificate(&st, k, n).map_err(err)?)
}

/// Geodesic icosphere.
#[pyclass(name = "SphereMesh", frozen)]
struct PyMesh(Arc<SphereMesh>);

#[pymethods]
impl PyMesh {
    #[new]
    fn new(level: usize) -> PyResult<Self> {
        Ok(Self(Arc::new(build_icosphere(level).map_err(err)?)))
    }

    #[getter]
    fn level(&self) -> usize {
        self.0.level()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.0.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.0.n_edges()
    }

    #[getter]
    fn n_faces(&self) -> usize {
        self.0.n_faces()
    }

    fn total_area(&self) -> f64 {
        self.0.total_area()
    }

    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn face_areas(&self) -> Vec<f64> {
        self.0.face_areas().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("SphereMesh(level={}, faces={})", self.0.level(), self.0.n_faces())
    }
}

/// Unitary lattice connection on a sphere mesh.
#[pyclass(name = "GaugeField", frozen)]
struct PyField(ym::GaugeField);

#[pymethods]
impl PyField {
    #[staticmethod]
    fn identity(mesh: &PyMesh, rank: usize) -> PyResult<Self> {
        Ok(Self(ym::GaugeField::identity(mesh.0.clone(), rank).map_err(err)?))
    }

    #[staticmethod]
    fn monopole(mesh: &PyMesh, degrees: Vec<i64>) -> PyResult<Self> {
        Ok(Self(ym::monopole_field(mesh.0.clone(), &degrees).map_err(err)?))
    }

    #[staticmethod]
    fn quasi_positive(mesh: &PyMesh) -> PyResult<Self> {
        Ok(Self(ym::quasi_positive_field(mesh.0.clone()).map_err(err)?))
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    fn perturb(&self, eps: f64, seed: u64) -> PyResult<Self> {
        Ok(Self(ym::perturb(&self.0, eps, seed).map_err(err)?))
    }

    fn gauge_scramble(&self, seed: u64) -> Self {
        Self(ym::gauge_scramble(&self.0, seed))
    }

    fn energy(&self) -> PyResult<f64> {
        ym::ym_energy(&self.0).map_err(err)
    }

    fn gradient_norm(&self) -> PyResult<f64> {
        let xi = ym::ym_gradient(&self.0).map_err(err)?;
        Ok(ym::gradient_norm(&self.0, &xi))
    }

    fn total_degree(&self) -> PyResult<i64> {
        ym::total_degree(&self.0).map_err(err)
    }

    /// Per-face eigenvalues of the contracted curvature, ascending.
    fn curvature_eigenvalues(&self) -> PyResult<Vec<Vec<f64>>> {
        let c = ym::curvature_field(&self.0).map_err(err)?;
        Ok(c.eigenvalues)
    }

    /// Runs the flow; returns `(final_field, trace_dict)`.
    #[pyo3(signature = (max_steps = 10_000, grad_tol = 1e-6, step_size = None, record_every = 1))]
    fn flow<'py>(
        &self,
        py: Python<'py>,
        max_steps: usize,
        grad_tol: f64,
        step_size: Option<f64>,
        record_every: usize,
    ) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let mut cfg = FlowConfig::for_mesh(self.0.mesh());
        cfg.max_steps = max_steps;
        cfg.grad_tol = grad_tol;
        cfg.record_every = record_every;
        if let Some(s) = step_size {
            cfg.step_size = s;
        }
        let (field, trace) = py.detach(|| ym::run_flow(&self.0, &cfg)).map_err(err)?;
        Ok((Self(field), to_py(py, &trace)?))
    }

    /// Splitting-type certificate of a (converged) field against its trace.
    fn certificate<'py>(&self, py: Python<'py>, trace: Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let text: String = py.import("json")?.call_method1("dumps", (trace,))?.extract()?;
        let trace: ym::FlowTrace = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        to_py(py, &ym::convergence_certificate(&self.0, &trace).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("GaugeField(rank={}, edges={})", self.0.rank(), self.0.n_edges())
    }
}

#[pymodule]
#[pyo3(name = "curvflow")]
fn curvflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(lambda12, m)?)?;
    m.add_function(wrap_pyfunction!(classify_lambda12, m)?)?;
    m.add_function(wrap_pyfunction!(bisectional_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonal_ricci, m)?)?;
    m.add_function(wrap_pyfunction!(certify_two_positivity, m)?)?;
    m.add_function(wrap_pyfunction!(degree_certificate, m)?)?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyField>()?;
    Ok(())
}
