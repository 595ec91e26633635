//! Python bindings: surfaces, coefficient vectors, solves, operator
//! application and the rate and regularity diagnostics.

use awbem::analysis::{self, RegularityParams};
use awbem::basis::{best_n_term_curve, Kind, WaveletIndex};
use awbem::discretize::{self, EntryCache, QuadConfig, RightHandSide};
use awbem::solver::{self, Mode, RhsApprox, SolverConfig};
use awbem::surface::{self, Point, RelationKind, SurfacePoint};
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: awbem::Error) -> PyErr {
    match e {
        awbem::Error::InvalidArgument(_) | awbem::Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        awbem::Error::PatchIndex { .. } => PyIndexError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn point(p: [f64; 3]) -> Point {
    Point::new(p[0], p[1], p[2])
}

/// Closed polyhedral surface made of flat parallelogram patches.
#[pyclass(name = "Surface", frozen)]
pub struct PySurface {
    inner: surface::Surface,
}

#[pymethods]
impl PySurface {
    /// Built-in surface by name: "fichera" or "cube".
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        surface::Surface::by_name(name).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn fichera() -> Self {
        Self {
            inner: surface::make_fichera(),
        }
    }

    #[staticmethod]
    fn cube() -> Self {
        Self {
            inner: surface::make_cube(),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn num_patches(&self) -> usize {
        self.inner.num_patches()
    }

    #[getter]
    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    fn is_closed(&self) -> bool {
        self.inner.is_closed()
    }

    /// Corners of every patch.
    fn patches(&self) -> Vec<[[f64; 3]; 4]> {
        self.inner
            .patches()
            .iter()
            .map(|p| p.corners.map(|c| [c.x, c.y, c.z]))
            .collect()
    }

    fn lift(&self, patch: usize, s: f64, t: f64) -> PyResult<[f64; 3]> {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(PyValueError::new_err(format!("({s}, {t}) outside the unit square")));
        }
        let p = self.inner.lift(SurfacePoint::new(patch, s, t)).map_err(to_py)?;
        Ok([p.x, p.y, p.z])
    }

    /// `(kind, coplanar)` with kind one of "identical", "common-edge",
    /// "common-vertex", "disjoint".
    fn patch_relation(&self, i: usize, j: usize) -> PyResult<(&'static str, bool)> {
        let r = self.inner.patch_relation(i, j).map_err(to_py)?;
        let kind = match r.kind {
            RelationKind::Identical => "identical",
            RelationKind::CommonEdge => "common-edge",
            RelationKind::CommonVertex => "common-vertex",
            RelationKind::Disjoint => "disjoint",
        };
        Ok((kind, r.coplanar))
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }

    fn __repr__(&self) -> String {
        format!("Surface('{}', {} patches)", self.inner.name(), self.inner.num_patches())
    }
}

type IndexTuple = (u16, i8, u32, u32, String);

fn make_index(t: &IndexTuple) -> PyResult<WaveletIndex> {
    let (patch, level, k1, k2, kind) = t;
    let kind: Kind = kind.parse().map_err(to_py)?;
    if *level < 0 {
        if kind != Kind::Scaling || *level != -1 || *k1 != 0 || *k2 != 0 {
            return Err(PyValueError::new_err("scaling functions have level -1 and position (0, 0)"));
        }
        return Ok(WaveletIndex::scaling(*patch));
    }
    WaveletIndex::wavelet(*patch, *level as u8, *k1, *k2, kind).map_err(to_py)
}

fn index_tuple(i: &WaveletIndex) -> IndexTuple {
    (i.patch, i.level, i.k1, i.k2, i.kind.name().to_string())
}

/// Finitely supported wavelet coefficients keyed by
/// `(patch, level, k1, k2, kind)`.
#[pyclass(name = "CoeffVector", skip_from_py_object)]
#[derive(Clone, Default)]
pub struct PyCoeffVector {
    inner: awbem::basis::CoeffVector,
}

#[pymethods]
impl PyCoeffVector {
    #[new]
    #[pyo3(signature = (items = Vec::new()))]
    fn new(items: Vec<(IndexTuple, f64)>) -> PyResult<Self> {
        let mut inner = awbem::basis::CoeffVector::new();
        for (idx, v) in &items {
            inner.add(make_index(idx)?, *v);
        }
        Ok(Self { inner })
    }

    fn get(&self, index: IndexTuple) -> PyResult<f64> {
        Ok(self.inner.get(&make_index(&index)?))
    }

    fn set(&mut self, index: IndexTuple, value: f64) -> PyResult<()> {
        self.inner.set(make_index(&index)?, value);
        Ok(())
    }

    fn items(&self) -> Vec<(IndexTuple, f64)> {
        self.inner.iter().map(|(i, v)| (index_tuple(i), *v)).collect()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        awbem::basis::CoeffVector::from_text(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// `σ_n`: ℓ2 norm of all but the `n` largest coefficients, for each `n`.
    fn best_n_term(&self, n_list: Vec<usize>) -> Vec<(usize, f64)> {
        best_n_term_curve(&self.inner, &n_list)
    }

    fn __repr__(&self) -> String {
        format!("CoeffVector({} entries, norm {:.6e})", self.inner.len(), self.inner.norm())
    }
}

fn rhs_from(kind: &str, alpha: f64, value: f64) -> PyResult<RightHandSide> {
    match kind {
        "point" => Ok(RightHandSide::fichera_corner(alpha)),
        "cartoon" => Ok(RightHandSide::cube_cartoon()),
        "constant" => Ok(RightHandSide::Constant(value)),
        other => Err(PyValueError::new_err(format!("unknown rhs '{other}' (point, cartoon, constant)"))),
    }
}

/// Adaptive or uniform solve. Returns a dict with the history rows
/// `(step, dofs, residual, delta, wall_time_s)`, the termination reason,
/// the solution and the number of active indices.
#[pyfunction]
#[pyo3(signature = (surface, rhs = "point", alpha = 0.5, value = 1.0, mode = "adaptive", eps = 1e-2, theta = 0.3, omega = 0.4, max_level = 30, max_dofs = None, max_iterations = 200))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    surface: &PySurface,
    rhs: &str,
    alpha: f64,
    value: f64,
    mode: &str,
    eps: f64,
    theta: f64,
    omega: f64,
    max_level: u8,
    max_dofs: Option<usize>,
    max_iterations: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let g = rhs_from(rhs, alpha, value)?;
    let mode: Mode = mode.parse().map_err(to_py)?;
    let cfg = SolverConfig {
        mode,
        eps,
        theta,
        omega,
        max_level,
        max_dofs,
        max_iterations,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    g.validate(&surface.inner).map_err(to_py)?;
    let s = &surface.inner;
    let result = py
        .detach(|| {
            let cache = EntryCache::new(s, cfg.quad);
            let mut approx = RhsApprox::new(s, g, cfg.quad, cfg.resolve_level)?;
            solver::solve(s, &cache, &mut approx, &cfg)
        })
        .map_err(to_py)?;
    let history: Vec<(usize, usize, f64, f64, f64)> = result
        .history
        .iter()
        .map(|h| (h.step, h.dofs, h.residual, h.delta, h.wall_time_s))
        .collect();
    let out = PyDict::new(py);
    out.set_item("history", history)?;
    out.set_item("termination", result.termination.name())?;
    out.set_item("dofs", result.tree.len())?;
    out.set_item("u", PyCoeffVector { inner: result.u })?;
    Ok(out)
}

/// `(½I − K) v` to accuracy `delta`; returns `(w, error_estimate)`.
#[pyfunction]
#[pyo3(signature = (surface, v, delta, max_level = 30))]
fn apply(py: Python<'_>, surface: &PySurface, v: &PyCoeffVector, delta: f64, max_level: u8) -> PyResult<(PyCoeffVector, f64)> {
    let s = &surface.inner;
    let v = &v.inner;
    let out = py
        .detach(|| {
            let cache = EntryCache::new(s, QuadConfig::default());
            solver::apply(s, &cache, v, delta, max_level)
        })
        .map_err(to_py)?;
    Ok((PyCoeffVector { inner: out.w }, out.error_estimate))
}

/// `∫_Q ⟨η(y), y − x⟩ / |y − x|³ dσ(y)` for a planar quadrilateral.
#[pyfunction]
fn solid_angle(quad: [[f64; 3]; 4], x: [f64; 3]) -> PyResult<f64> {
    discretize::solid_angle(&quad.map(point), &point(x)).map_err(to_py)
}

/// Least-squares rate of `value ≈ C n^{-r}`; returns `(r, log C, r²)`.
#[pyfunction]
#[pyo3(signature = (points, window = None))]
fn fit_rate(points: Vec<(f64, f64)>, window: Option<(usize, usize)>) -> PyResult<(f64, f64, f64)> {
    let fit = analysis::fit_rate(&points, window.map(|(a, b)| a..b)).map_err(to_py)?;
    Ok((fit.slope, fit.intercept, fit.r2))
}

/// Predicted best n-term exponent and its intermediate quantities.
#[pyfunction]
fn predicted_gamma<'py>(py: Python<'py>, s: f64, s_prime: f64, p: f64, k: f64, rho: f64) -> PyResult<Bound<'py, PyDict>> {
    let g = analysis::predicted_gamma(&RegularityParams { s, s_prime, p, k, rho }).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("alpha_star", g.alpha_star)?;
    out.set_item("theta", g.theta)?;
    out.set_item("gamma_star", g.gamma_star)?;
    out.set_item("rate", g.rate)?;
    out.set_item("gamma_bound_p2", g.gamma_bound_p2)?;
    Ok(out)
}

#[pyfunction]
fn lemma_a1_check(x: Vec<f64>, h: Vec<f64>, alpha: f64, m: f64) -> PyResult<bool> {
    analysis::lemma_a1_check(&x, &h, alpha, m).map_err(to_py)
}

/// `(ρ < 1 − α, diverges)` for the weighted norm of the point singularity.
#[pyfunction]
fn weighted_sobolev_finiteness(alpha: f64, rho: f64) -> PyResult<(bool, bool)> {
    let r = analysis::weighted_sobolev_finiteness(alpha, rho).map_err(to_py)?;
    Ok((r.predicate, r.diverges))
}

/// Registers the classes and functions on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurface>()?;
    m.add_class::<PyCoeffVector>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(solid_angle, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_a1_check, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_sobolev_finiteness, m)?)?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "awbem")]
fn awbem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
