//! Python bindings: models, baths, Green's functions, spectra and oracles.

use keldysh_core::bath::{BathSpec, CutoffFamily, SelfEnergyFn};
use keldysh_core::greens::{CoupledSystem, FreqGrid, FreqUnits};
use keldysh_core::model::{bosonize, critical_coupling, BosonModel, SpinModelParams};
use keldysh_core::observables::{self, ExponentFit};
use keldysh_core::oracle::{self, DiscretizedBath, FockTruncation};
use keldysh_core::spectrum::{self, ModeSet};
use keldysh_core::Error;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(keldysh, NumericalError, PyRuntimeError, "A computation failed on valid input.");

fn to_py(e: Error) -> PyErr {
    if e.is_invalid_input() {
        PyValueError::new_err(e.to_string())
    } else {
        NumericalError::new_err(e.to_string())
    }
}

fn parse_family(name: &str) -> Result<CutoffFamily, Error> {
    name.parse()
}

#[pyclass(name = "BosonModel", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyBosonModel {
    inner: BosonModel,
}

#[pymethods]
impl PyBosonModel {
    #[new]
    #[pyo3(signature = (omega0, lambda_, n = 100, k = 0.0))]
    fn new(omega0: f64, lambda_: f64, n: u64, k: f64) -> PyResult<Self> {
        Ok(Self {
            inner: BosonModel::new(omega0, lambda_, n, k).map_err(to_py)?,
        })
    }

    /// Mode of the spin model with exchange `j` and anisotropy `delta`.
    #[staticmethod]
    #[pyo3(signature = (j, delta, n = 100, k = 0.0))]
    fn from_spin(j: f64, delta: f64, n: u64, k: f64) -> PyResult<Self> {
        let params = SpinModelParams::new(j, delta, n, k).map_err(to_py)?;
        Ok(Self { inner: bosonize(&params) })
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.inner.omega0
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    /// γ₀ for the Ohmic Drude–Lorentz bath.
    fn critical_coupling(&self) -> PyResult<f64> {
        critical_coupling(&self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!("BosonModel(omega0={}, lambda_={}, n={}, k={})", m.omega0, m.lambda, m.n, m.k)
    }
}

#[pyclass(name = "BathSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyBathSpec {
    inner: BathSpec,
}

#[pymethods]
impl PyBathSpec {
    #[new]
    #[pyo3(signature = (family = "drude", s = 1.0, omega_c = 1.0, gamma = 0.0))]
    fn new(family: &str, s: f64, omega_c: f64, gamma: f64) -> PyResult<Self> {
        let family = parse_family(family).map_err(to_py)?;
        Ok(Self {
            inner: BathSpec::new(family, s, omega_c, gamma).map_err(to_py)?,
        })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family.to_string()
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn omega_c(&self) -> f64 {
        self.inner.omega_c
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    fn with_gamma(&self, gamma: f64) -> PyResult<Self> {
        let inner = self.inner.with_gamma(gamma);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Σ(ω) on the real axis.
    fn self_energy(&self, omega: f64) -> PyResult<f64> {
        keldysh_core::bath::self_energy(&self.inner, omega).map_err(to_py)
    }

    fn spectral_density(&self, omega: f64) -> PyResult<f64> {
        keldysh_core::bath::spectral_density(&self.inner, omega).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!("BathSpec(family='{}', s={}, omega_c={}, gamma={})", b.family, b.s, b.omega_c, b.gamma)
    }
}

#[pyclass(name = "CoupledSystem", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCoupledSystem {
    inner: CoupledSystem,
}

fn roots(set: ModeSet) -> Vec<Complex64> {
    set.roots()
}

#[pymethods]
impl PyCoupledSystem {
    #[new]
    #[pyo3(signature = (model, bath, sigma_prefactor = 1.0))]
    fn new(model: PyRef<'_, PyBosonModel>, bath: PyRef<'_, PyBathSpec>, sigma_prefactor: f64) -> PyResult<Self> {
        let sigma = SelfEnergyFn::new(&bath.inner).map_err(to_py)?.with_prefactor(sigma_prefactor);
        Ok(Self {
            inner: CoupledSystem::with_sigma(&model.inner, sigma),
        })
    }

    fn at_gamma(&self, gamma: f64) -> PyResult<Self> {
        let inner = self.inner.at_gamma(gamma);
        inner.bath().validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn transition_coupling(&self) -> PyResult<f64> {
        self.inner.transition_coupling().map_err(to_py)
    }

    fn spectral_response(&self, omega: f64) -> PyResult<f64> {
        self.inner.spectral_response(omega).map_err(to_py)
    }

    fn keldysh_correlator(&self, omega: f64) -> PyResult<f64> {
        self.inner.keldysh_correlator(omega).map_err(to_py)
    }

    /// Retarded Green's function as a nested 2×2 list.
    fn retarded(&self, omega: f64) -> PyResult<Vec<Vec<Complex64>>> {
        let g = self.inner.retarded(omega).map_err(to_py)?;
        Ok(g.0.iter().map(|row| row.to_vec()).collect())
    }

    /// Steady-state occupation `⟨a†a⟩`.
    fn density(&self) -> PyResult<f64> {
        observables::density(&self.inner).map_err(to_py)
    }

    fn effective_temperature(&self) -> PyResult<f64> {
        self.inner.effective_temperature(None).map_err(to_py)
    }

    /// Mean-field mode frequencies.
    fn modes(&self) -> PyResult<Vec<Complex64>> {
        spectrum::modes(&self.inner, None).map(roots).map_err(to_py)
    }

    /// Mode frequencies with the O(1/N) correction at the mean-field amplitude.
    fn fluctuation_modes(&self) -> PyResult<Vec<Complex64>> {
        let mf = keldysh_core::model::mean_field_amplitude(&self.inner.model, self.inner.bath().gamma).map_err(to_py)?;
        spectrum::modes(&self.inner, Some(&mf)).map(roots).map_err(to_py)
    }

    fn locate_transition<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let t = spectrum::locate_transition(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("gamma", t.gamma)?;
        d.set_item("root_modulus", t.root_modulus)?;
        d.set_item("bisections", t.bisections)?;
        Ok(d)
    }

    /// `A` and `iG^K` on `ratios × linspace(lo, hi, n)`; frequencies in units of Ω.
    #[pyo3(signature = (ratios, lo = -2.0, hi = 2.0, n = 401))]
    fn response_surface<'py>(
        &self,
        py: Python<'py>,
        ratios: Vec<f64>,
        lo: f64,
        hi: f64,
        n: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = FreqGrid::linspace(lo, hi, n, FreqUnits::Scaled).map_err(to_py)?;
        let sweep = observables::sweep_system(&self.inner, &ratios, &grid).map_err(to_py)?;
        let rows = |v: &[f64]| -> Vec<Vec<f64>> { v.chunks(n).map(<[f64]>::to_vec).collect() };
        let d = PyDict::new(py);
        d.set_item("gamma_over_gamma0", sweep.gamma_ratio.clone())?;
        d.set_item("omega_tilde", sweep.omega.values().to_vec())?;
        d.set_item("A", rows(&sweep.spectral))?;
        d.set_item("iGK", rows(&sweep.correlator))?;
        d.set_item("peak_track", sweep.peak_track.clone())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("CoupledSystem({:?}, {:?})", self.inner.model, self.inner.bath())
    }
}

#[pyfunction]
fn characteristic_roots(model: PyRef<'_, PyBosonModel>, bath: PyRef<'_, PyBathSpec>) -> PyResult<Vec<Complex64>> {
    spectrum::characteristic_roots(&model.inner, &bath.inner).map(roots).map_err(to_py)
}

#[pyfunction]
fn find_transition(model: PyRef<'_, PyBosonModel>, bath: PyRef<'_, PyBathSpec>) -> PyResult<f64> {
    spectrum::find_transition(&model.inner, &bath.inner).map_err(to_py)
}

#[pyfunction]
fn steady_density(model: PyRef<'_, PyBosonModel>, bath: PyRef<'_, PyBathSpec>) -> PyResult<f64> {
    observables::steady_density(&model.inner, &bath.inner).map_err(to_py)
}

/// Condensate amplitude φ₀ at coupling γ.
#[pyfunction]
fn mean_field_amplitude(model: PyRef<'_, PyBosonModel>, gamma: f64) -> PyResult<Complex64> {
    keldysh_core::model::mean_field_amplitude(&model.inner, gamma)
        .map(|mf| mf.phi0)
        .map_err(to_py)
}

fn fit_dict<'py>(py: Python<'py>, fit: &ExponentFit) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("alpha", fit.alpha)?;
    d.set_item("std_error", fit.std_error)?;
    d.set_item("r_squared", fit.r_squared)?;
    d.set_item("gamma0", fit.gamma0)?;
    d.set_item("gamma_lo", fit.gamma_lo)?;
    d.set_item("gamma_hi", fit.gamma_hi)?;
    Ok(d)
}

/// Exponent α of `C ∼ (γ₀ − γ)^{−α}` over `[lo, hi]γ₀`.
#[pyfunction]
#[pyo3(signature = (model, bath, lo = 0.9, hi = 0.999, points = 24))]
fn fit_divergence_exponent<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyBosonModel>,
    bath: PyRef<'_, PyBathSpec>,
    lo: f64,
    hi: f64,
    points: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let sys = CoupledSystem::new(&model.inner, &bath.inner).map_err(to_py)?;
    let g0 = sys.transition_coupling().map_err(to_py)?;
    let fit = observables::fit_system(&sys, [lo * g0, hi * g0], points).map_err(to_py)?;
    fit_dict(py, &fit)
}

#[pyfunction]
#[pyo3(signature = (model, n_max = 20))]
fn lindblad_steady_state<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyBosonModel>,
    n_max: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let trunc = FockTruncation::new(n_max).map_err(to_py)?;
    let s = oracle::lindblad_steady_state(&model.inner, &trunc).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("occupation", s.occupation)?;
    d.set_item("vacuum_fidelity", s.vacuum_fidelity)?;
    d.set_item("population_decay_rate", s.population_decay_rate)?;
    d.set_item("slowest_decay_rate", s.slowest_decay_rate)?;
    d.set_item("tail_population", s.tail_population)?;
    d.set_item("n_max", s.n_max)?;
    Ok(d)
}

/// Occupation of the mode coupled to `modes` discrete bath oscillators
/// damped at rate `epsilon`.
#[pyfunction]
#[pyo3(signature = (model, bath, modes = 800, epsilon = 1e-6))]
fn lyapunov_density(
    model: PyRef<'_, PyBosonModel>,
    bath: PyRef<'_, PyBathSpec>,
    modes: usize,
    epsilon: f64,
) -> PyResult<f64> {
    let discrete = DiscretizedBath::standard(&bath.inner, modes).map_err(to_py)?;
    oracle::lyapunov_density(&model.inner, &discrete, epsilon).map_err(to_py)
}

#[pymodule]
fn keldysh(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBosonModel>()?;
    m.add_class::<PyBathSpec>()?;
    m.add_class::<PyCoupledSystem>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(characteristic_roots, m)?)?;
    m.add_function(wrap_pyfunction!(find_transition, m)?)?;
    m.add_function(wrap_pyfunction!(steady_density, m)?)?;
    m.add_function(wrap_pyfunction!(mean_field_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(fit_divergence_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(lindblad_steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_density, m)?)?;
    Ok(())
}
