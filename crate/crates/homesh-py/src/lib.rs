//! Python bindings: a `Mesh` class wrapping the native mesh with adapt,
//! energy, file, and figure operations, plus the run report as a plain
//! attribute object.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use homesh::energy::total_energy;
use homesh::io::{read_mesh, write_mesh};
use homesh::mesh::{generate_quadrant_tri_mesh, generate_unit_square_quad_mesh};
use homesh::svg::{emit_svg, DEFAULT_SAMPLES_PER_EDGE};
use homesh::{
    optimize, validity_scan, Coord2, GaussianRingProfile, MaterialConstants, Mesh, MetricField,
    OptimizerConfig, RefBasis, TargetTables,
};

fn to_py_err(e: homesh::Error) -> PyErr {
    use homesh::Error::*;
    match e {
        Io(err) => PyIOError::new_err(err.to_string()),
        Parse { .. } | Config(_) | Unsupported(_) => PyValueError::new_err(e.to_string()),
        InvalidMesh(_) | Geometry(_) | Singular(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_metric(name: &str, center: (f64, f64)) -> PyResult<MetricField> {
    let c = Coord2::new(center.0, center.1);
    match name {
        "identity" => Ok(MetricField::Identity),
        "isotropic" => Ok(MetricField::Isotropic(GaussianRingProfile::ring_at(c))),
        "ring" => Ok(MetricField::Ring(GaussianRingProfile::ring_at(c))),
        other => Err(PyValueError::new_err(format!(
            "unknown metric '{other}' (expected identity, isotropic, or ring)"
        ))),
    }
}

fn constants(mu: f64, lam: f64) -> PyResult<MaterialConstants> {
    MaterialConstants::new(mu, lam).map_err(to_py_err)
}

/// Counters and energies describing one adaptation run.
#[pyclass(name = "AdaptReport")]
struct PyAdaptReport {
    #[pyo3(get)]
    sweeps_run: usize,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    initial_energy: f64,
    #[pyo3(get)]
    final_energy: f64,
    #[pyo3(get)]
    max_node_displacement: f64,
    #[pyo3(get)]
    min_det_f_final: f64,
    #[pyo3(get)]
    per_sweep_energy: Vec<f64>,
}

#[pymethods]
impl PyAdaptReport {
    fn __repr__(&self) -> String {
        format!(
            "AdaptReport(sweeps_run={}, converged={}, final_energy={:.6e})",
            self.sweeps_run,
            if self.converged { "True" } else { "False" },
            self.final_energy
        )
    }
}

/// A high-order 2D mesh: nodes, elements, boundary curves, and bindings.
#[pyclass(name = "Mesh")]
struct PyMesh {
    inner: Mesh,
}

#[pymethods]
impl PyMesh {
    /// Uniform n x n quad mesh of polynomial order p on the unit square.
    #[staticmethod]
    fn unit_square(n: usize, p: usize) -> PyResult<Self> {
        let inner = generate_unit_square_quad_mesh(n, p).map_err(to_py_err)?;
        Ok(PyMesh { inner })
    }

    /// Triangulated unit quadrant of order p with target element size h.
    #[staticmethod]
    fn quadrant(h: f64, p: usize) -> PyResult<Self> {
        let inner = generate_quadrant_tri_mesh(p, h).map_err(to_py_err)?;
        Ok(PyMesh { inner })
    }

    /// Load a mesh from its text format.
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let inner = read_mesh(path).map_err(to_py_err)?;
        Ok(PyMesh { inner })
    }

    /// Write the mesh in its text format (exact float round trip).
    fn write(&self, path: &str) -> PyResult<()> {
        write_mesh(&self.inner, path).map_err(to_py_err)
    }

    /// Render the element edges to an SVG figure.
    #[pyo3(signature = (path, samples_per_edge = DEFAULT_SAMPLES_PER_EDGE))]
    fn write_svg(&self, path: &str, samples_per_edge: usize) -> PyResult<()> {
        emit_svg(&self.inner, path, samples_per_edge).map_err(to_py_err)
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.inner.n_elements()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    /// Coordinates of node i.
    fn node(&self, i: usize) -> PyResult<(f64, f64)> {
        if i >= self.inner.n_nodes() {
            return Err(PyValueError::new_err(format!("node {i} out of range")));
        }
        let p = self.inner.node(i);
        Ok((p.x, p.y))
    }

    /// All node coordinates, in id order.
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.nodes().iter().map(|p| (p.x, p.y)).collect()
    }

    /// Smallest Jacobian determinant ratio over all quadrature points;
    /// positive means every element is valid.
    fn validity(&self) -> PyResult<f64> {
        let basis = RefBasis::for_mesh(&self.inner).map_err(to_py_err)?;
        Ok(validity_scan(&self.inner, &basis))
    }

    /// Deformation energy of the mesh against the named metric.
    #[pyo3(signature = (metric = "ring", center = (0.5, 0.5), mu = 1.0, lam = 1.0))]
    fn total_energy(&self, metric: &str, center: (f64, f64), mu: f64, lam: f64) -> PyResult<f64> {
        let field = parse_metric(metric, center)?;
        let c = constants(mu, lam)?;
        let basis = RefBasis::for_mesh(&self.inner).map_err(to_py_err)?;
        let tables = TargetTables::build(&self.inner, &basis, &field).map_err(to_py_err)?;
        Ok(total_energy(&self.inner, &tables, &c).total)
    }

    /// Relocate nodes to minimize the deformation energy against the named
    /// metric. Mutates the mesh and returns the run report.
    #[pyo3(signature = (
        metric = "ring",
        center = (0.5, 0.5),
        mu = 1.0,
        lam = 1.0,
        max_sweeps = 200,
        seed = 0,
    ))]
    fn adapt(
        &mut self,
        metric: &str,
        center: (f64, f64),
        mu: f64,
        lam: f64,
        max_sweeps: usize,
        seed: u64,
    ) -> PyResult<PyAdaptReport> {
        let field = parse_metric(metric, center)?;
        let c = constants(mu, lam)?;
        let config = OptimizerConfig {
            max_sweeps,
            rng_seed: seed,
            ..OptimizerConfig::default()
        };
        let report = optimize(&mut self.inner, &field, &c, &config).map_err(to_py_err)?;
        Ok(PyAdaptReport {
            sweeps_run: report.sweeps_run,
            converged: report.converged,
            initial_energy: report.initial_energy,
            final_energy: report.final_energy,
            max_node_displacement: report.max_node_displacement,
            min_det_f_final: report.min_det_f_final,
            per_sweep_energy: report.per_sweep_energy,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(order={}, nodes={}, elements={})",
            self.inner.order(),
            self.inner.n_nodes(),
            self.inner.n_elements()
        )
    }
}

#[pymodule]
fn homesh_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyAdaptReport>()?;
    Ok(())
}
