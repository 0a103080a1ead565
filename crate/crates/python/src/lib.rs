//! Python bindings for `breather-core`: the period map, the reduced
//! oscillator, radial coefficient profiles, breather assembly and the
//! verification residuals.
//!
//! All errors surface as `ValueError` carrying the library message.

use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use breather_core::coeffexpr::RadialProfile as CoreProfile;
use breather_core::finite_diff::Order;
use breather_core::oscillator::{self, EnergyLevel, PhaseState, PowerPair as CorePowers};
use breather_core::periodmap::{fit_tail_exponent, PeriodMap as CoreMap, QuadratureSettings};
use breather_core::radial::{self, BreatherSpec, MediumCoefficients};
use breather_core::verify;

fn err<E: Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn powers(p: f64, q: f64) -> PyResult<CorePowers> {
    CorePowers::new(p, q).map_err(err)
}

fn level(e: f64) -> PyResult<EnergyLevel> {
    EnergyLevel::new(e).map_err(err)
}

fn settings(panels: usize, nodes_per_panel: usize) -> PyResult<QuadratureSettings> {
    if panels == 0 || nodes_per_panel == 0 {
        return Err(PyValueError::new_err(
            "quadrature needs at least one panel and one node",
        ));
    }
    Ok(QuadratureSettings::new(panels, nodes_per_panel))
}

/// Amplitude and period maps of φ̈ + φ + |φ|^{p−1}φ + |φ|^{q−1}φ = 0.
#[pyclass(name = "PeriodMap", frozen)]
struct PyPeriodMap(CoreMap);

#[pymethods]
impl PyPeriodMap {
    #[new]
    #[pyo3(signature = (p, q, panels = 64, nodes_per_panel = 16))]
    fn new(p: f64, q: f64, panels: usize, nodes_per_panel: usize) -> PyResult<Self> {
        Ok(Self(CoreMap::new(
            powers(p, q)?,
            settings(panels, nodes_per_panel)?,
        )))
    }

    /// The map with the q term removed.
    #[staticmethod]
    fn single_power(p: f64) -> PyResult<Self> {
        CoreMap::single_power(p, QuadratureSettings::default())
            .map(Self)
            .map_err(err)
    }

    fn amplitude(&self, e: f64) -> PyResult<f64> {
        Ok(self.0.amplitude(level(e)?))
    }

    fn period(&self, e: f64) -> PyResult<f64> {
        Ok(self.0.period(level(e)?))
    }

    fn period_deficit(&self, e: f64) -> PyResult<f64> {
        Ok(self.0.period_deficit(level(e)?))
    }

    fn invert_period(&self, s: f64) -> PyResult<f64> {
        self.0.invert_period(s).map(EnergyLevel::value).map_err(err)
    }

    fn w_of_u(&self, u: f64) -> f64 {
        self.0.w_of_u(u)
    }

    fn psi_of_u(&self, u: f64) -> f64 {
        self.0.psi_of_u(u).value()
    }

    fn u_of_amplitude(&self, amplitude: f64) -> f64 {
        self.0.u_of_amplitude(amplitude)
    }

    /// Power-law fit of the inverse period map on the window (lo, hi).
    #[pyo3(signature = (lo = std::f64::consts::TAU - 1e-2, hi = std::f64::consts::TAU - 1e-4))]
    fn fit_tail_exponent<'py>(
        &self,
        py: Python<'py>,
        lo: f64,
        hi: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let fit = fit_tail_exponent(&self.0, (lo, hi)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("alpha", fit.alpha)?;
        d.set_item("lambda_hat", fit.lambda_hat)?;
        d.set_item("window", fit.window)?;
        d.set_item("residual", fit.residual)?;
        d.set_item("alpha_refined", fit.alpha_refined)?;
        d.set_item("delta_p_exponent", fit.delta_p_exponent)?;
        d.set_item("delta_q_exponent", fit.delta_q_exponent)?;
        d.set_item("refinement_stable", fit.refinement_stable)?;
        d.set_item("lambda_tilde", fit.lambda_tilde)?;
        d.set_item("theta_tilde", fit.theta_tilde)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let pq = self.0.powers();
        format!("PeriodMap(p={}, q={})", pq.p(), pq.q())
    }
}

#[pyfunction]
fn first_integral(phi: f64, phidot: f64, p: f64, q: f64) -> PyResult<f64> {
    Ok(oscillator::first_integral(
        PhaseState::new(phi, phidot),
        powers(p, q)?,
    ))
}

/// (φ, φ̇) at time t on the orbit through (0, √e).
#[pyfunction]
fn integrate_orbit(e: f64, t: f64, p: f64, q: f64) -> PyResult<(f64, f64)> {
    let s = oscillator::integrate_orbit(level(e)?, t, powers(p, q)?).map_err(err)?;
    Ok((s.phi, s.phidot))
}

#[pyfunction]
fn orbit_samples(e: f64, times: Vec<f64>, p: f64, q: f64) -> PyResult<Vec<(f64, f64)>> {
    let states = oscillator::orbit_samples(level(e)?, &times, powers(p, q)?).map_err(err)?;
    Ok(states.into_iter().map(|s| (s.phi, s.phidot)).collect())
}

#[pyfunction]
fn orbit_return_time(e: f64, p: f64, q: f64) -> PyResult<f64> {
    oscillator::orbit_return_time(level(e)?, powers(p, q)?).map_err(err)
}

/// A radial coefficient expression in the variable r.
#[pyclass(name = "RadialProfile", frozen)]
struct PyProfile(CoreProfile);

#[pymethods]
impl PyProfile {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        CoreProfile::parse(source).map(Self).map_err(err)
    }

    #[getter]
    fn source(&self) -> &str {
        self.0.source()
    }

    /// Canonical rendering of the parsed expression.
    fn canonical(&self) -> String {
        self.0.ast().to_string()
    }

    fn eval(&self, r: f64) -> PyResult<f64> {
        self.0.eval(r).map_err(err)
    }

    #[pyo3(signature = (r, order = 1))]
    fn derivative(&self, r: f64, order: u8) -> PyResult<f64> {
        let order = Order::try_from(order)
            .map_err(|k| PyValueError::new_err(format!("order must be 1 or 2, got {k}")))?;
        self.0.derivative(r, order).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.source().to_string()
    }

    fn __repr__(&self) -> String {
        format!("RadialProfile({:?})", self.0.source())
    }
}

/// Coefficients ρ̃, μ̃, ṽ_q with powers p < q; ṽ_p is derived.
#[pyclass(name = "Medium", frozen)]
struct PyMedium(MediumCoefficients);

#[pymethods]
impl PyMedium {
    #[new]
    fn new(rho: &str, mu: &str, vq: &str, p: f64, q: f64) -> PyResult<Self> {
        MediumCoefficients::from_sources(rho, mu, vq, powers(p, q)?)
            .map(Self)
            .map_err(err)
    }

    /// The built-in scenario with p = 3, q = 4.
    #[staticmethod]
    fn remark41() -> Self {
        Self(MediumCoefficients::remark41())
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.powers.p()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.0.powers.q()
    }

    /// Coefficients and derived fields (τ̃, σ̃, ṽ_p) at radius r.
    fn at<'py>(&self, py: Python<'py>, r: f64) -> PyResult<Bound<'py, PyDict>> {
        let f = self.0.at(r).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("rho", f.rho)?;
        d.set_item("mu", f.mu)?;
        d.set_item("vq", f.vq)?;
        d.set_item("vp", f.vp)?;
        d.set_item("tau", f.tau)?;
        d.set_item("sigma", f.sigma)?;
        Ok(d)
    }

    #[pyo3(signature = (r_max = 6.0, gamma_probe = None))]
    fn check_hypotheses<'py>(
        &self,
        py: Python<'py>,
        r_max: f64,
        gamma_probe: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let rep = radial::check_hypotheses(&self.0, r_max, gamma_probe).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("h1_pass", rep.h1_pass)?;
        d.set_item("h2_pass", rep.h2_pass)?;
        d.set_item("h3_pass", rep.h3_pass)?;
        d.set_item("h4_pass", rep.h4_pass)?;
        d.set_item("all_pass", rep.all_pass())?;
        d.set_item("sigma0", rep.sigma0)?;
        d.set_item("gamma_fit", rep.gamma_fit)?;
        d.set_item("c2_diagnostics", rep.c2_diagnostics.to_vec())?;
        d.set_item("r_check", rep.r_check)?;
        d.set_item("details", rep.details)?;
        Ok(d)
    }

    fn monochromatic_profile(&self, r: f64) -> PyResult<f64> {
        radial::monochromatic_profile(&self.0, r).map_err(err)
    }

    /// Largest monochromatic residual on the given radii.
    fn monochromatic_residual(&self, r_grid: Vec<f64>) -> PyResult<f64> {
        Ok(verify::monochromatic_residual(&self.0, &r_grid)
            .map_err(err)?
            .max_abs_residual)
    }
}

/// The breather y(r, t) with period T = 2π σ(0).
#[pyclass(name = "Breather", frozen)]
struct PyBreather(BreatherSpec);

#[pymethods]
impl PyBreather {
    #[new]
    #[pyo3(signature = (medium, r_max = 6.0, phase_shift = None))]
    fn new(medium: &PyMedium, r_max: f64, phase_shift: Option<&str>) -> PyResult<Self> {
        let spec = BreatherSpec::new(medium.0.clone(), r_max, QuadratureSettings::default())
            .map_err(err)?;
        let spec = match phase_shift {
            Some(src) => spec
                .make_phase_shifted(CoreProfile::parse(src).map_err(err)?)
                .map_err(err)?,
            None => spec,
        };
        Ok(Self(spec))
    }

    #[getter]
    fn period(&self) -> f64 {
        self.0.period()
    }

    #[getter]
    fn sigma0(&self) -> f64 {
        self.0.sigma0()
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.0.r_max()
    }

    fn radial_energy(&self, r: f64) -> PyResult<f64> {
        self.0.radial_energy(r).map(EnergyLevel::value).map_err(err)
    }

    /// max over t of |y(r, t)|, that is τ̃(r)·A(e(r)).
    fn envelope(&self, r: f64) -> PyResult<f64> {
        Ok(self.0.shell(r).map_err(err)?.envelope())
    }

    fn eval(&self, r: f64, t: f64) -> PyResult<f64> {
        self.0.breather_eval(r, t).map_err(err)
    }

    fn samples(&self, r: f64, times: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.breather_samples(r, &times).map_err(err)
    }

    /// The vector field y(|x|, t)·x/|x|.
    fn field(&self, x: [f64; 3], t: f64) -> PyResult<[f64; 3]> {
        self.0.field_eval(x, t).map_err(err)
    }

    /// Largest radial-equation residual over the grid, with ṽ_p scaled by
    /// `vp_scale`.
    #[pyo3(signature = (r_grid, t_grid, vp_scale = 1.0))]
    fn ode_residual(&self, r_grid: Vec<f64>, t_grid: Vec<f64>, vp_scale: f64) -> PyResult<f64> {
        Ok(
            verify::ode_residual_scaled(&self.0, &r_grid, &t_grid, vp_scale)
                .map_err(err)?
                .max_abs_residual,
        )
    }

    fn curl_check(&self, points: Vec<[f64; 3]>, t: f64) -> PyResult<f64> {
        Ok(verify::curl_check(&self.0, &points, t)
            .map_err(err)?
            .max_abs_residual)
    }

    /// Rows (c, c′, c″) of c = √e at each radius.
    fn c2_flatness(&self, radii: Vec<f64>) -> PyResult<Vec<[f64; 3]>> {
        self.0.c2_flatness(&radii).map_err(err)
    }
}

/// Largest relative gap between quadrature and integration for period and
/// amplitude over the given levels.
#[pyfunction]
fn cross_oracle(p: f64, q: f64, e_list: Vec<f64>) -> PyResult<f64> {
    Ok(
        verify::cross_oracle_suite(powers(p, q)?, &e_list, QuadratureSettings::default())
            .map_err(err)?
            .max_abs_residual,
    )
}

#[pymodule]
fn breather_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPeriodMap>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyMedium>()?;
    m.add_class::<PyBreather>()?;
    m.add_function(wrap_pyfunction!(first_integral, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_samples, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_return_time, m)?)?;
    m.add_function(wrap_pyfunction!(cross_oracle, m)?)?;
    Ok(())
}
