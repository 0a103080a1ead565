//! The reduced oscillator φ̈ + φ + |φ|^{p−1}φ + |φ|^{q−1}φ = 0 and its
//! conserved energy.

use serde::Serialize;
use thiserror::Error;

use crate::rk::{IntegrateError, Rkf78, Tolerances};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscillatorError {
    #[error("exponents must satisfy 1 < p < q (got p = {p}, q = {q})")]
    InvalidPowers { p: f64, q: f64 },
    #[error("energy level must be finite and non-negative (got {0})")]
    InvalidEnergy(f64),
    #[error("integration failed: {0}")]
    StepSizeUnderflow(#[from] IntegrateError),
    #[error("orbit did not return to its starting point before t = {0}")]
    NoReturnDetected(f64),
}

/// The nonlinearity exponents (p, q), 1 < p < q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPair {
    p: f64,
    q: f64,
}

impl PowerPair {
    pub fn new(p: f64, q: f64) -> Result<Self, OscillatorError> {
        if p.is_finite() && q.is_finite() && 1.0 < p && p < q {
            Ok(Self { p, q })
        } else {
            Err(OscillatorError::InvalidPowers { p, q })
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// A point (φ, φ̇) of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub phi: f64,
    pub phidot: f64,
}

impl PhaseState {
    pub fn new(phi: f64, phidot: f64) -> Self {
        Self { phi, phidot }
    }

    fn to_array(self) -> [f64; 2] {
        [self.phi, self.phidot]
    }

    fn from_array(y: [f64; 2]) -> Self {
        Self {
            phi: y[0],
            phidot: y[1],
        }
    }
}

/// Value of the first integral identifying a closed orbit. Always the level
/// itself, never its square root.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct EnergyLevel(f64);

impl EnergyLevel {
    pub const ZERO: EnergyLevel = EnergyLevel(0.0);

    pub fn new(e: f64) -> Result<Self, OscillatorError> {
        if e.is_finite() && e >= 0.0 {
            Ok(Self(e))
        } else {
            Err(OscillatorError::InvalidEnergy(e))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Unchecked constructor for values already known to be valid levels.
    pub(crate) fn raw(e: f64) -> Self {
        debug_assert!(e >= 0.0 && e.is_finite());
        Self(e)
    }
}

/// sign(x)·|x|^k, the odd extension used for every power term.
#[inline]
pub fn signed_pow(x: f64, k: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(k).copysign(x)
    }
}

/// B(φ, φ̇) = φ̇² + φ² + 2/(p+1)|φ|^{p+1} + 2/(q+1)|φ|^{q+1}.
pub fn first_integral(state: PhaseState, powers: PowerPair) -> f64 {
    let (p, q) = (powers.p, powers.q);
    let a = state.phi.abs();
    state.phidot * state.phidot
        + a * a
        + 2.0 / (p + 1.0) * a.powf(p + 1.0)
        + 2.0 / (q + 1.0) * a.powf(q + 1.0)
}

/// Right-hand side (φ̇, −φ − |φ|^{p−1}φ − |φ|^{q−1}φ).
pub fn ode_rhs(state: PhaseState, powers: PowerPair) -> PhaseState {
    let x = state.phi;
    PhaseState {
        phi: state.phidot,
        phidot: -x - signed_pow(x, powers.p) - signed_pow(x, powers.q),
    }
}

/// Smallest exponent whose power term is non-smooth at φ = 0, i.e. not an
/// odd integer.
fn kink_exponent(powers: PowerPair) -> Option<f64> {
    [powers.p, powers.q]
        .into_iter()
        .filter(|k| !(k.fract() == 0.0 && k.rem_euclid(2.0) == 1.0))
        .reduce(f64::min)
}

fn solver(powers: PowerPair) -> Rkf78<impl Fn(&[f64; 2]) -> [f64; 2], 2> {
    let rk = Rkf78::new(
        move |y: &[f64; 2]| ode_rhs(PhaseState::from_array(*y), powers).to_array(),
        Tolerances::default(),
    );
    match kink_exponent(powers) {
        Some(s) => rk.with_kink(0, s),
        None => rk,
    }
}

fn initial_state(e: EnergyLevel) -> [f64; 2] {
    [0.0, e.0.sqrt()]
}

/// φ(t; e), φ̇(t; e) for the orbit through (0, √e).
pub fn integrate_orbit(
    e: EnergyLevel,
    t: f64,
    powers: PowerPair,
) -> Result<PhaseState, OscillatorError> {
    if e.0 == 0.0 {
        return Ok(PhaseState::new(0.0, 0.0));
    }
    let y = solver(powers).integrate(initial_state(e), t)?;
    Ok(PhaseState::from_array(y))
}

/// The orbit through (0, √e) sampled at arbitrary times in one outward
/// sweep per direction. Results agree with [`integrate_orbit`] to solver
/// tolerance.
pub fn orbit_samples(
    e: EnergyLevel,
    times: &[f64],
    powers: PowerPair,
) -> Result<Vec<PhaseState>, OscillatorError> {
    if e.0 == 0.0 {
        return Ok(vec![PhaseState::new(0.0, 0.0); times.len()]);
    }
    let ys = solver(powers).sample(initial_state(e), times)?;
    Ok(ys.into_iter().map(PhaseState::from_array).collect())
}

const RETURN_HORIZON: f64 = 100.0;

/// Which zero crossing to look for.
#[derive(Debug, Clone, Copy)]
enum Crossing {
    /// φ passes from negative to non-negative.
    PhiUpward,
    /// φ̇ passes from positive to non-positive.
    VelocityDownward,
}

/// First time after t = 0 at which the selected crossing occurs, polished by
/// Newton iteration on the crossing component.
fn first_crossing(
    e: EnergyLevel,
    powers: PowerPair,
    kind: Crossing,
) -> Result<(f64, PhaseState), OscillatorError> {
    let rk = solver(powers);
    let comp = |y: &[f64; 2]| match kind {
        Crossing::PhiUpward => y[0],
        Crossing::VelocityDownward => y[1],
    };
    let hit = |before: f64, after: f64| match kind {
        Crossing::PhiUpward => before < 0.0 && after >= 0.0,
        Crossing::VelocityDownward => before > 0.0 && after <= 0.0,
    };
    let mut st = rk.stepper(initial_state(e), 0.0, 1.0);
    loop {
        let (t0, y0) = (st.t, st.y);
        st.step(Some(RETURN_HORIZON))?;
        let (t1, y1) = (st.t, st.y);
        if matches!(kind, Crossing::PhiUpward) && y0[0] < 0.0 && y1[0] == 0.0 {
            // the stepper already landed on the crossing
            return Ok((t1, PhaseState::from_array(y1)));
        }
        if hit(comp(&y0), comp(&y1)) {
            // Newton on the component, re-integrating from the step start.
            let (c0, c1) = (comp(&y0), comp(&y1));
            let mut tc = t0 + (t1 - t0) * c0 / (c0 - c1);
            let mut yc = y0;
            for _ in 0..20 {
                yc = rk.integrate(y0, tc - t0)?;
                let slope = comp(&rk.rhs(&yc));
                if slope == 0.0 {
                    break;
                }
                let dt = -comp(&yc) / slope;
                tc += dt;
                if dt.abs() <= 1e-15 * tc.abs() {
                    yc = rk.integrate(y0, tc - t0)?;
                    break;
                }
            }
            return Ok((tc, PhaseState::from_array(yc)));
        }
        if st.t >= RETURN_HORIZON {
            return Err(OscillatorError::NoReturnDetected(RETURN_HORIZON));
        }
    }
}

/// Minimal period of the orbit through (0, √e), found by direct integration
/// and event location. Independent of the quadrature in `periodmap`.
pub fn orbit_return_time(e: EnergyLevel, powers: PowerPair) -> Result<f64, OscillatorError> {
    if e.0 <= 0.0 {
        return Err(OscillatorError::InvalidEnergy(e.0));
    }
    first_crossing(e, powers, Crossing::PhiUpward).map(|(t, _)| t)
}

/// Largest displacement reached along the orbit, located at the first
/// turning point (φ̇ = 0) of the integrated trajectory.
pub fn orbit_peak(e: EnergyLevel, powers: PowerPair) -> Result<f64, OscillatorError> {
    if e.0 == 0.0 {
        return Ok(0.0);
    }
    first_crossing(e, powers, Crossing::VelocityDownward).map(|(_, s)| s.phi.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pq34() -> PowerPair {
        PowerPair::new(3.0, 4.0).unwrap()
    }

    #[test]
    fn power_pair_validation() {
        assert!(PowerPair::new(1.0, 2.0).is_err());
        assert!(PowerPair::new(3.0, 3.0).is_err());
        assert!(PowerPair::new(4.0, 3.0).is_err());
        assert!(PowerPair::new(f64::NAN, 3.0).is_err());
        assert!(PowerPair::new(1.5, 2.5).is_ok());
    }

    #[test]
    fn energy_level_validation() {
        assert!(EnergyLevel::new(-1e-300).is_err());
        assert!(EnergyLevel::new(f64::INFINITY).is_err());
        assert_eq!(EnergyLevel::new(0.0).unwrap(), EnergyLevel::ZERO);
    }

    #[test]
    fn first_integral_examples() {
        let pq = pq34();
        assert_eq!(first_integral(PhaseState::new(0.0, 0.0), pq), 0.0);
        assert!((first_integral(PhaseState::new(1.0, 0.0), pq) - 1.9).abs() < 1e-15);
        let other = PowerPair::new(1.7, 5.2).unwrap();
        assert_eq!(first_integral(PhaseState::new(0.0, 2.0), other), 4.0);
    }

    #[test]
    fn ode_rhs_examples() {
        let pq = pq34();
        assert_eq!(
            ode_rhs(PhaseState::new(0.0, 0.0), pq),
            PhaseState::new(0.0, 0.0)
        );
        assert_eq!(
            ode_rhs(PhaseState::new(1.0, 0.0), pq),
            PhaseState::new(0.0, -3.0)
        );
        assert_eq!(
            ode_rhs(PhaseState::new(0.0, 5.0), pq),
            PhaseState::new(5.0, 0.0)
        );
    }

    #[test]
    fn rhs_is_odd_for_fractional_powers() {
        let pq = PowerPair::new(1.5, 2.5).unwrap();
        let a = ode_rhs(PhaseState::new(0.7, 0.0), pq);
        let b = ode_rhs(PhaseState::new(-0.7, 0.0), pq);
        assert!(a.phidot.is_finite());
        assert_eq!(a.phidot, -b.phidot);
    }

    #[test]
    fn zero_energy_is_the_rest_state() {
        let s = integrate_orbit(EnergyLevel::ZERO, 12.3, pq34()).unwrap();
        assert_eq!(s, PhaseState::new(0.0, 0.0));
    }

    #[test]
    fn small_amplitude_matches_harmonic_solution() {
        let e = EnergyLevel::new(1e-10).unwrap();
        let s = integrate_orbit(e, PI / 2.0, pq34()).unwrap();
        assert!((s.phi / 1e-5 - 1.0).abs() < 1e-3, "{s:?}");
        assert!(s.phidot.abs() < 1e-8);
    }

    #[test]
    fn energy_drift_within_contract() {
        let pq = pq34();
        for e in [1e-6, 0.3, 1.9, 40.0] {
            for t in [0.7, 5.0, 21.3] {
                let s = integrate_orbit(EnergyLevel::new(e).unwrap(), t, pq).unwrap();
                let drift = (first_integral(s, pq) - e).abs();
                assert!(drift <= e * 1e-10 + 1e-12, "e={e} t={t} drift={drift:e}");
            }
        }
    }

    #[test]
    fn fractional_powers_conserve_energy() {
        // |φ|^{1/2}φ is only C¹ at φ = 0
        let pq = PowerPair::new(1.5, 2.5).unwrap();
        for e in [1e-4, 0.3, 1.9, 40.0, 1e3] {
            for t in [0.7, 5.0, 60.0] {
                let s = integrate_orbit(EnergyLevel::new(e).unwrap(), t, pq).unwrap();
                let drift = (first_integral(s, pq) - e).abs();
                assert!(drift <= e * 1e-10 + 1e-12, "e={e} t={t} drift={drift:e}");
            }
        }
    }

    #[test]
    fn kink_exponent_skips_odd_integers() {
        assert_eq!(kink_exponent(pq34()), Some(4.0));
        assert_eq!(kink_exponent(PowerPair::new(3.0, 5.0).unwrap()), None);
        assert_eq!(kink_exponent(PowerPair::new(1.5, 3.0).unwrap()), Some(1.5));
    }

    #[test]
    fn return_time_closes_the_orbit() {
        let pq = pq34();
        let e = EnergyLevel::new(1.9).unwrap();
        let t = orbit_return_time(e, pq).unwrap();
        let s = integrate_orbit(e, t, pq).unwrap();
        assert!(
            s.phi.abs() < 1e-8 && (s.phidot - 1.9f64.sqrt()).abs() < 1e-8,
            "{s:?}"
        );
    }

    #[test]
    fn return_time_small_and_large_energy() {
        let pq = pq34();
        let t = orbit_return_time(EnergyLevel::new(1e-10).unwrap(), pq).unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-4);
        let t = orbit_return_time(EnergyLevel::new(1e6).unwrap(), pq).unwrap();
        assert!(t < 0.5, "t={t}");
    }

    #[test]
    fn return_time_rejects_zero_energy() {
        assert!(orbit_return_time(EnergyLevel::ZERO, pq34()).is_err());
    }

    #[test]
    fn peak_at_unit_amplitude() {
        // B(1, 0) = 1.9 for (p, q) = (3, 4)
        let a = orbit_peak(EnergyLevel::new(1.9).unwrap(), pq34()).unwrap();
        assert!((a - 1.0).abs() < 1e-10, "a={a}");
    }
}
