//! Python bindings for the frisec simulator.
//!
//! Matrices cross the boundary as lists of rows. Sweep and validation
//! results come back as lists of dicts keyed by the CSV column names.

use frisec::channel::{LinkBudget, Receiver};
use frisec::control::Policy;
use frisec::harness::engine::Scenario;
use frisec::harness::output::{Cell, Table};
use frisec::harness::sweep::{
    bounds_table, fits_table, sweep_size, sweep_snr, sweep_table, validate_bounds, validate_fits,
};
use frisec::harness::{simulate_gains, with_workers, ExperimentConfig};
use frisec::secrecy::{self, SecrecyTarget};
use frisec::specfun::{self, QuadratureSpec};
use frisec::surface::{self, CorrelationMatrix, SelectionSet, SurfaceGeometry};
use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(frisec, FrisecError, PyValueError);

fn err(e: frisec::Error) -> PyErr {
    FrisecError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn receiver(name: &str) -> PyResult<Receiver> {
    match name {
        "bob" => Ok(Receiver::Bob),
        "eve" => Ok(Receiver::Eve),
        other => Err(FrisecError::new_err(format!("unknown receiver {other:?}, expected \"bob\" or \"eve\""))),
    }
}

fn table_to_dicts<'py>(py: Python<'py>, table: &Table) -> PyResult<Vec<Bound<'py, PyDict>>> {
    table
        .rows
        .iter()
        .map(|row| {
            let d = PyDict::new(py);
            for (key, cell) in table.header.iter().zip(row) {
                match cell {
                    Cell::Real(x) => d.set_item(key, *x)?,
                    Cell::Int(n) => d.set_item(key, *n)?,
                    Cell::Text(s) => d.set_item(key, s)?,
                }
            }
            Ok(d)
        })
        .collect()
}

/// Rectangular fluid surface sampled on an `mx` by `mz` grid.
#[pyclass(name = "SurfaceGeometry", frozen)]
struct PyGeometry(SurfaceGeometry);

#[pymethods]
impl PyGeometry {
    #[new]
    fn new(mx: usize, mz: usize, wx: f64, wz: f64, wavelength: f64) -> PyResult<Self> {
        SurfaceGeometry::new(mx, mz, wx, wz, wavelength).map(PyGeometry).map_err(err)
    }

    #[getter]
    fn mx(&self) -> usize {
        self.0.mx()
    }

    #[getter]
    fn mz(&self) -> usize {
        self.0.mz()
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.0.wavelength()
    }

    #[getter]
    fn spacing(&self) -> (f64, f64) {
        self.0.spacing()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn element_distance(&self, i: usize, l: usize) -> PyResult<f64> {
        self.0.element_distance(i, l).map_err(err)
    }

    fn correlation(&self) -> PyResult<PyCorrelation> {
        surface::build_correlation(&self.0).map(PyCorrelation).map_err(err)
    }

    fn __repr__(&self) -> String {
        let (wx, wz) = self.0.aperture_wavelengths();
        format!("SurfaceGeometry(mx={}, mz={}, aperture=({wx}, {wz}) wavelengths)", self.0.mx(), self.0.mz())
    }
}

/// Spatial correlation matrix with its PSD square root.
#[pyclass(name = "CorrelationMatrix", frozen)]
struct PyCorrelation(CorrelationMatrix);

#[pymethods]
impl PyCorrelation {
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(FrisecError::new_err("correlation matrix must be square"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        CorrelationMatrix::from_matrix(m).map(PyCorrelation).map_err(err)
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        rows(self.0.j())
    }

    fn sqrt(&self) -> Vec<Vec<f64>> {
        rows(self.0.j_sqrt())
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    #[getter]
    fn clamped_mass(&self) -> f64 {
        self.0.clamped_mass()
    }

    fn __len__(&self) -> usize {
        self.0.dim()
    }

    /// Submatrix over the active `indices`.
    fn reduce(&self, indices: Vec<usize>) -> PyResult<Vec<Vec<f64>>> {
        let sel = SelectionSet::new(indices, self.0.dim()).map_err(err)?;
        surface::reduce_correlation(&self.0, &sel).map(|m| rows(&m)).map_err(err)
    }

    /// `(tr(J²), tr(J⁴))` of the submatrix over `indices`.
    fn traces(&self, indices: Vec<usize>) -> PyResult<(f64, f64)> {
        let sel = SelectionSet::new(indices, self.0.dim()).map_err(err)?;
        let j = surface::reduce_correlation(&self.0, &sel).map_err(err)?;
        Ok(surface::trace_moments(&j))
    }
}

/// Gamma law fitted to Bob's gain.
#[pyclass(name = "GammaFit", frozen)]
struct PyGammaFit(secrecy::GammaFit);

#[pymethods]
impl PyGammaFit {
    #[new]
    fn new(k_b: f64, theta_b: f64) -> PyResult<Self> {
        secrecy::GammaFit::new(k_b, theta_b).map(PyGammaFit).map_err(err)
    }

    #[staticmethod]
    fn from_traces(tr2: f64, tr4: f64) -> PyResult<Self> {
        secrecy::GammaFit::from_traces(tr2, tr4).map(PyGammaFit).map_err(err)
    }

    #[getter]
    fn k_b(&self) -> f64 {
        self.0.k_b
    }

    #[getter]
    fn theta_b(&self) -> f64 {
        self.0.theta_b
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn cdf(&self, g: f64) -> PyResult<f64> {
        secrecy::gamma_cdf(g, &self.0).map_err(err)
    }

    fn pdf(&self, g: f64) -> PyResult<f64> {
        secrecy::gamma_pdf(g, &self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("GammaFit(k_b={}, theta_b={})", self.0.k_b, self.0.theta_b)
    }
}

/// Exponential law fitted to Eve's gain.
#[pyclass(name = "ExpFit", frozen)]
struct PyExpFit(secrecy::ExpFit);

#[pymethods]
impl PyExpFit {
    #[new]
    fn new(theta_e: f64) -> PyResult<Self> {
        secrecy::ExpFit::new(theta_e).map(PyExpFit).map_err(err)
    }

    #[staticmethod]
    fn from_trace(tr2: f64) -> PyResult<Self> {
        secrecy::ExpFit::from_trace(tr2).map(PyExpFit).map_err(err)
    }

    #[getter]
    fn theta_e(&self) -> f64 {
        self.0.theta_e
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn cdf(&self, g: f64) -> PyResult<f64> {
        secrecy::exp_cdf(g, &self.0).map_err(err)
    }

    fn pdf(&self, g: f64) -> PyResult<f64> {
        secrecy::exp_pdf(g, &self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ExpFit(theta_e={})", self.0.theta_e)
    }
}

/// Transmit power, noise floors and path loss of the three links.
#[pyclass(name = "LinkBudget", frozen)]
struct PyLinkBudget(LinkBudget);

#[pymethods]
impl PyLinkBudget {
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    fn from_dbm(
        rho: f64,
        alpha: f64,
        d_f: f64,
        d_b: f64,
        d_e: f64,
        power_dbm: f64,
        noise_b_dbm: f64,
        noise_e_dbm: f64,
    ) -> PyResult<Self> {
        LinkBudget::from_dbm(rho, alpha, d_f, d_b, d_e, power_dbm, noise_b_dbm, noise_e_dbm)
            .map(PyLinkBudget)
            .map_err(err)
    }

    /// The reference link of the default configuration.
    #[staticmethod]
    fn reference() -> PyResult<Self> {
        ExperimentConfig::default().link_budget().map(PyLinkBudget).map_err(err)
    }

    fn with_bob_snr_db(&self, snr_db: f64) -> Self {
        PyLinkBudget(self.0.with_bob_snr_db(snr_db))
    }

    /// Average transmit SNR at `"bob"` or `"eve"`, linear.
    fn mean_snr(&self, receiver_name: &str) -> PyResult<f64> {
        Ok(self.0.mean_snr(receiver(receiver_name)?))
    }

    fn snr_per_gain(&self, receiver_name: &str) -> PyResult<f64> {
        Ok(self.0.snr_per_gain(receiver(receiver_name)?))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Experiment configuration; `toml` overrides the reference values.
#[pyclass(name = "Config")]
struct PyConfig(ExperimentConfig);

impl PyConfig {
    fn run<T: Send>(&self, py: Python<'_>, f: impl FnOnce(&ExperimentConfig) -> frisec::Result<T> + Send) -> PyResult<T> {
        let cfg = &self.0;
        cfg.validate().map_err(err)?;
        py.detach(|| with_workers(cfg.workers, || f(cfg))).map_err(err)?.map_err(err)
    }
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (toml = ""))]
    fn new(toml: &str) -> PyResult<Self> {
        ExperimentConfig::from_toml_str(toml).map(PyConfig).map_err(err)
    }

    #[staticmethod]
    fn default_toml() -> String {
        ExperimentConfig::default_toml()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }
    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.0.seed = v;
    }

    #[getter]
    fn trials(&self) -> usize {
        self.0.trials
    }
    #[setter]
    fn set_trials(&mut self, v: usize) {
        self.0.trials = v;
    }

    #[getter]
    fn fit_trials(&self) -> usize {
        self.0.fit_trials
    }
    #[setter]
    fn set_fit_trials(&mut self, v: usize) {
        self.0.fit_trials = v;
    }

    #[getter]
    fn workers(&self) -> usize {
        self.0.workers
    }
    #[setter]
    fn set_workers(&mut self, v: usize) {
        self.0.workers = v;
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.0.rate
    }
    #[setter]
    fn set_rate(&mut self, v: f64) {
        self.0.rate = v;
    }

    /// One of greedy, fixed-uniform, fixed-random, conventional.
    #[getter]
    fn policy(&self) -> &'static str {
        self.0.policy.name()
    }
    #[setter]
    fn set_policy(&mut self, v: &str) -> PyResult<()> {
        self.0.policy = v.parse::<Policy>().map_err(err)?;
        Ok(())
    }

    fn geometry(&self) -> PyResult<PyGeometry> {
        self.0.fris_geometry().map(PyGeometry).map_err(err)
    }

    fn link_budget(&self) -> PyResult<PyLinkBudget> {
        self.0.link_budget().map(PyLinkBudget).map_err(err)
    }

    /// Moment-matched laws for the configured surface under the configured
    /// policy, using the first `M_ON` entry.
    fn fit(&self, py: Python<'_>) -> PyResult<(PyGammaFit, PyExpFit)> {
        self.run(py, |cfg| scenario(cfg)?.fit(cfg.seed, cfg.fit_trials))
            .map(|(g, e)| (PyGammaFit(g), PyExpFit(e)))
    }

    /// Per-trial `(g_b, g_e)` lists for the configured surface and policy.
    fn simulate_gains(&self, py: Python<'_>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let gains = self.run(py, |cfg| simulate_gains(&scenario(cfg)?, cfg.seed, cfg.trials))?;
        Ok(gains.iter().map(|g| (g.g_b, g.g_e)).unzip())
    }

    fn sweep_snr<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let t = self.run(py, |cfg| sweep_snr(cfg).map(|r| sweep_table(&r)))?;
        table_to_dicts(py, &t)
    }

    fn sweep_size<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let t = self.run(py, |cfg| sweep_size(cfg).map(|r| sweep_table(&r)))?;
        table_to_dicts(py, &t)
    }

    fn validate_fits<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let t = self.run(py, |cfg| validate_fits(cfg).map(|r| fits_table(&r)))?;
        table_to_dicts(py, &t)
    }

    fn validate_bounds<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let t = self.run(py, |cfg| validate_bounds(cfg).map(|r| bounds_table(&r)))?;
        table_to_dicts(py, &t)
    }
}

fn scenario(cfg: &ExperimentConfig) -> frisec::Result<Scenario> {
    match cfg.policy {
        Policy::Conventional => Scenario::conventional(cfg.surface.m_conv[0], cfg.wavelength()),
        p => Scenario::fris(cfg.fris_geometry()?, p, cfg.surface.m_on[0], cfg.seed),
    }
}

#[pyfunction]
fn bessel_j0(x: f64) -> PyResult<f64> {
    specfun::bessel_j0(x).map_err(err)
}

/// G^{2,1}_{2,2}(z | -k, 0; 0, -1) in closed form.
#[pyfunction]
fn meijer_g_2122(z: f64, k: f64) -> PyResult<f64> {
    specfun::meijer_g_2122(z, k).map_err(err)
}

/// The same function by Mellin-Barnes contour integration.
#[pyfunction]
#[pyo3(signature = (z, k, contour_points = 2000))]
fn meijer_g_2122_oracle(z: f64, k: f64, contour_points: usize) -> PyResult<f64> {
    specfun::meijer_g_2122_oracle(z, k, contour_points).map_err(err)
}

#[pyfunction]
fn secrecy_capacity(gamma_b: f64, gamma_e: f64) -> f64 {
    secrecy::secrecy_capacity(gamma_b, gamma_e)
}

#[pyfunction]
fn asc_upper_bound(fit_b: &PyGammaFit, fit_e: &PyExpFit, budget: &PyLinkBudget) -> f64 {
    secrecy::asc_upper_bound(&fit_b.0, &fit_e.0, &budget.0)
}

#[pyfunction]
fn asc_oracle(fit_b: &PyGammaFit, fit_e: &PyExpFit, budget: &PyLinkBudget) -> PyResult<f64> {
    secrecy::asc_oracle(&fit_b.0, &fit_e.0, &budget.0, &QuadratureSpec::default()).map_err(err)
}

#[pyfunction]
fn sop_lower_bound(fit_b: &PyGammaFit, fit_e: &PyExpFit, budget: &PyLinkBudget, rate: f64) -> PyResult<f64> {
    let target = SecrecyTarget::new(rate).map_err(err)?;
    secrecy::sop_lower_bound(&fit_b.0, &fit_e.0, &budget.0, &target).map_err(err)
}

/// SOP lower bound as a function of the SNR ratio `z` and shape `k`.
#[pyfunction]
fn sop_lower_bound_at(z: f64, k: f64) -> PyResult<f64> {
    secrecy::sop_lower_bound_at(z, k).map_err(err)
}

#[pyfunction]
fn sop_oracle_at(z: f64, k: f64) -> PyResult<f64> {
    secrecy::sop_oracle_at(z, k, &QuadratureSpec::default()).map_err(err)
}

#[pymodule]
#[pyo3(name = "frisec")]
fn frisec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FrisecError", m.py().get_type::<FrisecError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyCorrelation>()?;
    m.add_class::<PyGammaFit>()?;
    m.add_class::<PyExpFit>()?;
    m.add_class::<PyLinkBudget>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(bessel_j0, m)?)?;
    m.add_function(wrap_pyfunction!(meijer_g_2122, m)?)?;
    m.add_function(wrap_pyfunction!(meijer_g_2122_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(secrecy_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(asc_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(asc_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(sop_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sop_lower_bound_at, m)?)?;
    m.add_function(wrap_pyfunction!(sop_oracle_at, m)?)?;
    Ok(())
}
