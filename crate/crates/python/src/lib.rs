//! Python bindings: presets, compatibility, the elliptic solve, fields and
//! the Liouville solver.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;

use kinetic_moser::densities::Preset as CorePreset;
use kinetic_moser::diagnostics::{self, DiagnosticsRecord as CoreRecord};
use kinetic_moser::elliptic::{self, Normalization};
use kinetic_moser::field::{self, FieldMethod};
use kinetic_moser::liouville::{EdgeScheme, SolverConfig};
use kinetic_moser::{DensityArray, DensitySpec, Error, PhaseGrid as CoreGrid};

create_exception!(kinetic_moser_py, KineticError, PyException);
create_exception!(kinetic_moser_py, CompatibilityError, KineticError);
create_exception!(kinetic_moser_py, BlowUpError, KineticError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Compatibility { .. } => CompatibilityError::new_err(e.to_string()),
        Error::NonFinite { .. } | Error::Cfl { .. } => BlowUpError::new_err(e.to_string()),
        Error::InvalidArgument(_) | Error::InvalidDensity(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => KineticError::new_err(e.to_string()),
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct PhaseGrid {
    inner: CoreGrid,
}

#[pymethods]
impl PhaseGrid {
    #[new]
    #[pyo3(signature = (nx, nv=None))]
    fn new(nx: usize, nv: Option<usize>) -> PyResult<Self> {
        let inner = CoreGrid::new(nx, nv.unwrap_or(nx)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx()
    }

    #[getter]
    fn nv(&self) -> usize {
        self.inner.nv()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    #[getter]
    fn dv(&self) -> f64 {
        self.inner.dv()
    }

    fn cell_centers(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.cell_centers()
    }

    fn __repr__(&self) -> String {
        format!("PhaseGrid(nx={}, nv={})", self.inner.nx(), self.inner.nv())
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Density {
    inner: DensitySpec,
}

#[pymethods]
impl Density {
    #[staticmethod]
    fn torus_f(eps: f64) -> PyResult<Self> {
        Ok(Self { inner: DensitySpec::torus_f(eps).map_err(to_py)? })
    }

    #[staticmethod]
    fn torus_g(eps: f64, eta: f64) -> PyResult<Self> {
        Ok(Self { inner: DensitySpec::torus_g(eps, eta).map_err(to_py)? })
    }

    #[staticmethod]
    fn gaussian(mu_x: f64, mu_v: f64, sigma_x: f64, sigma_v: f64) -> PyResult<Self> {
        Ok(Self { inner: DensitySpec::gaussian(mu_x, mu_v, sigma_x, sigma_v).map_err(to_py)? })
    }

    /// `base(x − shear·v, v)`.
    #[staticmethod]
    fn sheared(base: &Density, shear: f64) -> PyResult<Self> {
        Ok(Self { inner: DensitySpec::sheared(base.inner.clone(), shear).map_err(to_py)? })
    }

    /// Row-major values (x outer) on an `nx × nv` torus grid.
    #[staticmethod]
    fn gridded(nx: usize, nv: usize, values: Vec<f64>) -> PyResult<Self> {
        let grid = CoreGrid::new(nx, nv).map_err(to_py)?;
        let arr = DensityArray::from_values(grid, values).map_err(to_py)?;
        Ok(Self { inner: DensitySpec::gridded(arr).map_err(to_py)? })
    }

    fn eval(&self, x: f64, v: f64) -> f64 {
        self.inner.eval(x, v)
    }

    fn sample(&self, grid: &PhaseGrid) -> Vec<f64> {
        DensityArray::from_fn(grid.inner, |x, v| self.inner.eval(x, v)).values().to_vec()
    }

    fn __call__(&self, x: f64, v: f64) -> f64 {
        self.inner.eval(x, v)
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Preset {
    inner: CorePreset,
}

#[pymethods]
impl Preset {
    #[new]
    #[pyo3(signature = (name="torus", eps=0.3, eta=0.5))]
    fn new(name: &str, eps: f64, eta: f64) -> PyResult<Self> {
        Ok(Self { inner: CorePreset::by_name(name, eps, eta).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_pair(name: &str, f: &Density, g: &Density) -> Self {
        Self { inner: CorePreset::from_pair(name, f.inner.clone(), g.inner.clone()) }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn f(&self) -> Density {
        Density { inner: self.inner.f.clone() }
    }

    #[getter]
    fn g(&self) -> Density {
        Density { inner: self.inner.g.clone() }
    }

    #[getter]
    fn is_periodic(&self) -> bool {
        self.inner.is_periodic()
    }

    /// Velocity cell centres of the preset's axis with `nv` cells.
    fn velocity_centers(&self, nv: usize) -> PyResult<Vec<f64>> {
        Ok(self.inner.velocity_axis(nv).map_err(to_py)?.centers())
    }

    fn __repr__(&self) -> String {
        format!("Preset({:?})", self.inner.name)
    }
}

#[pyclass(frozen)]
struct CompatReport {
    #[pyo3(get)]
    xs: Vec<f64>,
    #[pyo3(get)]
    residuals: Vec<f64>,
    #[pyo3(get)]
    max_residual: f64,
    #[pyo3(get)]
    worst_x: f64,
}

#[pymethods]
impl CompatReport {
    #[pyo3(signature = (tol=1e-8))]
    fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

#[pyfunction]
#[pyo3(signature = (preset, nx=256, nv=256))]
fn check_compatibility(preset: &Preset, nx: usize, nv: usize) -> PyResult<CompatReport> {
    let grid = CoreGrid::new(nx, nv).map_err(to_py)?;
    let axis = preset.inner.velocity_axis(nv).map_err(to_py)?;
    let r = kinetic_moser::check_compatibility(&preset.inner.f, &preset.inner.g, &grid, &axis);
    Ok(CompatReport { xs: r.xs, residuals: r.residuals, max_residual: r.max_residual, worst_x: r.worst_x })
}

#[pyclass(frozen)]
struct Profile {
    #[pyo3(get)]
    v: Vec<f64>,
    #[pyo3(get)]
    u: Vec<f64>,
    #[pyo3(get)]
    du: Vec<f64>,
    #[pyo3(get)]
    flux: Vec<f64>,
    #[pyo3(get)]
    residual: f64,
}

/// `U_t(x, ·)` and `∂_v U_t(x, ·)` at the velocity centres.
#[pyfunction]
#[pyo3(signature = (preset, x, t, nv=256))]
fn solve_profile(preset: &Preset, x: f64, t: f64, nv: usize) -> PyResult<Profile> {
    let axis = preset.inner.velocity_axis(nv).map_err(to_py)?;
    let (f, g) = (&preset.inner.f, &preset.inner.g);
    let p = elliptic::solve_profile(f, g, x, t, &axis, Normalization::WeightedMean).map_err(to_py)?;
    let residual = elliptic::elliptic_residual(&p, f, g).map_err(to_py)?;
    Ok(Profile { v: axis.centers(), u: p.u, du: p.du, flux: p.flux, residual })
}

#[pyfunction]
fn closed_form_torus_du(x: f64, v: f64, t: f64, eps: f64, eta: f64) -> f64 {
    elliptic::closed_form_torus_du(x, v, t, eps, eta)
}

fn parse_method(method: &str) -> PyResult<FieldMethod> {
    method.parse().map_err(to_py)
}

#[pyclass(frozen)]
struct Field {
    inner: field::AccelerationField,
}

#[pymethods]
impl Field {
    /// `a(x, v, t)`.
    fn eval(&self, x: f64, v: f64, t: f64) -> PyResult<f64> {
        self.inner.eval_a(x, v, t).map_err(to_py)
    }

    /// `a` at every cell centre of `grid`, row-major.
    fn sample(&self, py: Python<'_>, grid: &PhaseGrid, t: f64) -> PyResult<Vec<f64>> {
        let at = self.inner.at_time(t).map_err(to_py)?;
        let grid = grid.inner;
        Ok(py.detach(|| DensityArray::from_fn(grid, |x, v| at.eval(x, v)).values().to_vec()))
    }

    #[getter]
    fn max_abs(&self) -> f64 {
        self.inner.max_abs_bound()
    }

    #[getter]
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

#[pyfunction]
#[pyo3(signature = (preset, nx=256, nv=256, method="closed-form"))]
fn build_field(py: Python<'_>, preset: &Preset, nx: usize, nv: usize, method: &str) -> PyResult<Field> {
    let method = parse_method(method)?;
    let grid = CoreGrid::new(nx, nv).map_err(to_py)?;
    let axis = preset.inner.velocity_axis(nv).map_err(to_py)?;
    let p = &preset.inner;
    let inner = py.detach(|| field::build_field(&p.f, &p.g, method, &grid, &axis)).map_err(to_py)?;
    Ok(Field { inner })
}

#[pyclass(frozen, get_all)]
struct DiagnosticsRecord {
    t: f64,
    mass: f64,
    l1_error: f64,
    min_rho: f64,
    steps: usize,
}

#[pymethods]
impl DiagnosticsRecord {
    fn __repr__(&self) -> String {
        format!(
            "DiagnosticsRecord(t={}, mass={}, l1_error={:e}, min_rho={}, steps={})",
            self.t, self.mass, self.l1_error, self.min_rho, self.steps
        )
    }
}

impl From<CoreRecord> for DiagnosticsRecord {
    fn from(r: CoreRecord) -> Self {
        Self { t: r.t, mass: r.mass, l1_error: r.l1_error, min_rho: r.min_rho, steps: r.step_count }
    }
}

fn solver_config(cfl: f64, output_times: Option<Vec<f64>>, scheme: &str) -> PyResult<SolverConfig> {
    let times = output_times.unwrap_or_else(|| SolverConfig::default().output_times);
    let scheme: EdgeScheme = scheme.parse().map_err(to_py)?;
    Ok(SolverConfig::new(cfl, cfl, 1.0, times).map_err(to_py)?.with_scheme(scheme))
}

/// Build the field, run the solver from `f` and diagnose each output time.
#[pyfunction]
#[pyo3(signature = (preset, nx=256, nv=256, method="closed-form", cfl=0.8, output_times=None, scheme="muscl"))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    preset: &Preset,
    nx: usize,
    nv: usize,
    method: &str,
    cfl: f64,
    output_times: Option<Vec<f64>>,
    scheme: &str,
) -> PyResult<Vec<DiagnosticsRecord>> {
    let method = parse_method(method)?;
    let cfg = solver_config(cfl, output_times, scheme)?;
    let grid = CoreGrid::new(nx, nv).map_err(to_py)?;
    let p = &preset.inner;
    let recs = py.detach(|| diagnostics::run_preset(p, method, &grid, &cfg)).map_err(to_py)?;
    Ok(recs.into_iter().map(Into::into).collect())
}

/// Torus pair with `(ε, η) = (0.3, 0.5)` on an `n × n` grid.
#[pyfunction]
#[pyo3(signature = (n=256, cfl=0.8))]
fn run_table1(py: Python<'_>, n: usize, cfl: f64) -> PyResult<Vec<DiagnosticsRecord>> {
    let cfg = solver_config(cfl, None, "muscl")?;
    let grid = CoreGrid::square(n).map_err(to_py)?;
    let recs = py.detach(|| diagnostics::run_table1(&grid, &cfg)).map_err(to_py)?;
    Ok(recs.into_iter().map(Into::into).collect())
}

/// `[(n, l1_error, order)]` with `order` None for the coarsest grid.
#[pyfunction]
#[pyo3(signature = (preset, sizes, method="closed-form", cfl=0.8, scheme="muscl"))]
fn convergence_study(
    py: Python<'_>,
    preset: &Preset,
    sizes: Vec<usize>,
    method: &str,
    cfl: f64,
    scheme: &str,
) -> PyResult<Vec<(usize, f64, Option<f64>)>> {
    let method = parse_method(method)?;
    let cfg = solver_config(cfl, None, scheme)?;
    let p = &preset.inner;
    let rows = py.detach(|| diagnostics::convergence_study(p, &sizes, method, &cfg)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.n, r.l1_error, r.order)).collect())
}

/// `ρ̃_t(wrap(x − t v), v)`.
#[pyfunction]
fn exact_path(preset: &Preset, x: f64, v: f64, t: f64) -> PyResult<f64> {
    diagnostics::exact_path(&preset.inner.f, &preset.inner.g, x, v, t).map_err(to_py)
}

#[pymodule]
fn kinetic_moser_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("KineticError", m.py().get_type::<KineticError>())?;
    m.add("CompatibilityError", m.py().get_type::<CompatibilityError>())?;
    m.add("BlowUpError", m.py().get_type::<BlowUpError>())?;
    m.add_class::<PhaseGrid>()?;
    m.add_class::<Density>()?;
    m.add_class::<Preset>()?;
    m.add_class::<CompatReport>()?;
    m.add_class::<Profile>()?;
    m.add_class::<Field>()?;
    m.add_class::<DiagnosticsRecord>()?;
    m.add_function(wrap_pyfunction!(check_compatibility, m)?)?;
    m.add_function(wrap_pyfunction!(solve_profile, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_torus_du, m)?)?;
    m.add_function(wrap_pyfunction!(build_field, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_table1, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(exact_path, m)?)?;
    Ok(())
}
