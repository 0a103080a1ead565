//! Amplitude and period of the closed orbits as functions of the energy
//! level, the auxiliary maps W and Ψ, the inverse period map Q, and a
//! power-law fit of Q near s = 2π.
//!
//! The period quadrature
//!
//! ```text
//! P(e) = 4 ∫₀¹ [1 − z² + a_p (1 − z^{p+1}) + a_q (1 − z^{q+1})]^{-1/2} dz,
//! a_p = 2/(p+1)·A^{p−1},  a_q = 2/(q+1)·A^{q−1},
//! ```
//!
//! is rewritten with z = cos ψ and 1 − z^k = (1 − z²)·m_k(z) as
//! `4 ∫₀^{π/2} [1 + a_p m_{p+1} + a_q m_{q+1}]^{-1/2} dψ`, whose integrand is
//! smooth. The factors m_k depend only on the exponents, so they are
//! tabulated once per [`PeriodMap`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;
use thiserror::Error;

use crate::oscillator::{EnergyLevel, OscillatorError, PowerPair};
use crate::quadrature::GaussLegendre;
use crate::roots::{brent, newton_bisect, RootError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeriodMapError {
    #[error("period {0} outside (0, 2π]")]
    OutOfRange(f64),
    #[error("invalid fit window [{lo}, {hi}]: {reason}")]
    InvalidWindow {
        lo: f64,
        hi: f64,
        reason: &'static str,
    },
    #[error("tail fit unstable: exponent {alpha} became {alpha_refined} under grid refinement")]
    FitUnstable { alpha: f64, alpha_refined: f64 },
    #[error("root finding failed: {0}")]
    Root(#[from] RootError),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
}

/// Composite Gauss–Legendre layout for the period quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureSettings {
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            panels: 64,
            nodes_per_panel: 16,
        }
    }
}

impl QuadratureSettings {
    pub fn new(panels: usize, nodes_per_panel: usize) -> Self {
        assert!(
            panels > 0 && nodes_per_panel > 0,
            "quadrature needs at least one node"
        );
        Self {
            panels,
            nodes_per_panel,
        }
    }

    pub fn doubled(self) -> Self {
        Self {
            panels: 2 * self.panels,
            ..self
        }
    }
}

/// Below this distance 1 − z the factors m_k use their Taylor series.
const SERIES_SWITCH: f64 = 1e-6;

/// m_k(z) = (1 − z^k)/(1 − z²) at z = cos ψ.
fn m_factor(k: f64, psi: f64) -> f64 {
    let gap = 2.0 * (0.5 * psi).sin().powi(2); // 1 − cos ψ without cancellation
    if gap < SERIES_SWITCH {
        m_series(k, gap)
    } else {
        m_direct(k, psi, gap)
    }
}

/// (1 − (1−w)^k)/w = k − C(k,2) w + C(k,3) w², divided by 1 + z = 2 − w.
fn m_series(k: f64, w: f64) -> f64 {
    let series = k - 0.5 * k * (k - 1.0) * w + k * (k - 1.0) * (k - 2.0) / 6.0 * w * w;
    series / (2.0 - w)
}

fn m_direct(k: f64, psi: f64, gap: f64) -> f64 {
    let s = psi.sin();
    let z = psi.cos();
    let num = if z < 0.5 {
        1.0 - (k * z.ln()).exp()
    } else {
        -(k * (-gap).ln_1p()).exp_m1()
    };
    num / (s * s)
}

#[derive(Debug, Clone, Copy)]
struct Node {
    weight: f64,
    m_p: f64,
    m_q: f64,
}

/// Amplitude, period and inverse period for one exponent pair.
///
/// `q_weight` scales the q-power term of the oscillator; it is 1 for the
/// model proper and 0 for the single-power reference model used to
/// calibrate the tail fit.
#[derive(Debug, Clone)]
pub struct PeriodMap {
    powers: PowerPair,
    q_weight: f64,
    settings: QuadratureSettings,
    nodes: Vec<Node>,
}

impl PeriodMap {
    pub fn new(powers: PowerPair, settings: QuadratureSettings) -> Self {
        Self::with_q_weight(powers, 1.0, settings)
    }

    /// The oscillator φ̈ + φ + |φ|^{p−1}φ = 0 with the q term switched off.
    pub fn single_power(p: f64, settings: QuadratureSettings) -> Result<Self, PeriodMapError> {
        let powers = PowerPair::new(p, p + 1.0)?;
        Ok(Self::with_q_weight(powers, 0.0, settings))
    }

    fn with_q_weight(powers: PowerPair, q_weight: f64, settings: QuadratureSettings) -> Self {
        let rule = GaussLegendre::new(settings.nodes_per_panel);
        let (p1, q1) = (powers.p() + 1.0, powers.q() + 1.0);
        let nodes = rule
            .composite(0.0, FRAC_PI_2, settings.panels)
            .into_iter()
            .map(|(psi, weight)| Node {
                weight,
                m_p: m_factor(p1, psi),
                m_q: m_factor(q1, psi),
            })
            .collect();
        Self {
            powers,
            q_weight,
            settings,
            nodes,
        }
    }

    pub fn powers(&self) -> PowerPair {
        self.powers
    }

    pub fn settings(&self) -> QuadratureSettings {
        self.settings
    }

    pub fn is_single_power(&self) -> bool {
        self.q_weight == 0.0
    }

    /// The unique A ≥ 0 with A² + 2/(p+1)A^{p+1} + 2/(q+1)A^{q+1} = e.
    pub fn amplitude(&self, e: EnergyLevel) -> f64 {
        let e = e.value();
        if e == 0.0 {
            return 0.0;
        }
        let (p, q, wq) = (self.powers.p(), self.powers.q(), self.q_weight);
        let g = |a: f64| {
            let ap = a.powf(p);
            let aq = a.powf(q);
            let val = a * a + 2.0 / (p + 1.0) * ap * a + wq * 2.0 / (q + 1.0) * aq * a - e;
            (val, 2.0 * (a + ap + wq * aq))
        };
        // A ≤ √e; the bracket always holds so failure is not expected.
        newton_bisect(g, 0.0, e.sqrt(), 1e-15, 500).unwrap_or_else(|_| e.sqrt())
    }

    /// (Σ w/√(1+x), Σ w·(1 − 1/√(1+x))) over the quadrature nodes for the
    /// coefficients a_p, a_q. Both sums are formed without cancellation.
    fn sums(&self, a_p: f64, a_q: f64) -> (f64, f64) {
        let mut full = 0.0;
        let mut deficit = 0.0;
        for n in &self.nodes {
            let x = a_p * n.m_p + a_q * n.m_q;
            let root = (1.0 + x).sqrt();
            full += n.weight / root;
            deficit += n.weight * x / (root * (1.0 + root));
        }
        (4.0 * full, 4.0 * deficit)
    }

    fn coefficients(&self, amplitude: f64) -> (f64, f64) {
        let (p, q) = (self.powers.p(), self.powers.q());
        (
            2.0 / (p + 1.0) * amplitude.powf(p - 1.0),
            self.q_weight * 2.0 / (q + 1.0) * amplitude.powf(q - 1.0),
        )
    }

    /// Minimal period P(e); exactly 2π at e = 0.
    pub fn period(&self, e: EnergyLevel) -> f64 {
        if e.value() == 0.0 {
            return TAU;
        }
        let (a_p, a_q) = self.coefficients(self.amplitude(e));
        self.sums(a_p, a_q).0
    }

    /// 2π − P(e), computed directly so it keeps full relative precision for
    /// small e.
    pub fn period_deficit(&self, e: EnergyLevel) -> f64 {
        if e.value() == 0.0 {
            return 0.0;
        }
        let (a_p, a_q) = self.coefficients(self.amplitude(e));
        self.sums(a_p, a_q).1
    }

    fn kappa_gamma(&self) -> (f64, f64) {
        let (p, q) = (self.powers.p(), self.powers.q());
        let gamma = (p - 1.0) / (q - 1.0);
        (2.0 / (p + 1.0) * ((q + 1.0) / 2.0).powf(gamma), gamma)
    }

    /// W(u) = 4∫₀¹ (1−z²)^{-1/2} [1 + m(z)(u + κ u^γ n(z))]^{-1/2} dz with
    /// m = m_{q+1}, n = m_{p+1}/m_{q+1}; P(e) = W(2/(q+1)·A(e)^{q−1}).
    pub fn w_of_u(&self, u: f64) -> f64 {
        if u == 0.0 {
            return TAU;
        }
        let (kappa, gamma) = self.kappa_gamma();
        let cross = kappa * u.powf(gamma);
        let lin = self.q_weight * u;
        4.0 * self
            .nodes
            .iter()
            .map(|nd| {
                let n = nd.m_p / nd.m_q;
                nd.weight / (1.0 + nd.m_q * (lin + cross * n)).sqrt()
            })
            .sum::<f64>()
    }

    /// Ψ(u) = e, the energy level whose amplitude is ((q+1)u/2)^{1/(q−1)}.
    pub fn psi_of_u(&self, u: f64) -> EnergyLevel {
        let (p, q) = (self.powers.p(), self.powers.q());
        let c = (q + 1.0) / 2.0;
        let e = c.powf(2.0 / (q - 1.0))
            * (u.powf(2.0 / (q - 1.0)) + self.q_weight * u.powf((q + 1.0) / (q - 1.0)))
            + 2.0 / (p + 1.0) * c.powf((p + 1.0) / (q - 1.0)) * u.powf((p + 1.0) / (q - 1.0));
        EnergyLevel::raw(e)
    }

    /// u = 2/(q+1)·A^{q−1}.
    pub fn u_of_amplitude(&self, amplitude: f64) -> f64 {
        let q = self.powers.q();
        2.0 / (q + 1.0) * amplitude.powf(q - 1.0)
    }

    /// Q(s): the energy level with P(e) = s, for 0 < s ≤ 2π.
    pub fn invert_period(&self, s: f64) -> Result<EnergyLevel, PeriodMapError> {
        if !(s > 0.0 && s <= TAU) {
            return Err(PeriodMapError::OutOfRange(s));
        }
        if s == TAU {
            return Ok(EnergyLevel::ZERO);
        }
        if s >= PI {
            // exact subtraction for s ∈ [π, 2π]
            return self.invert_deficit(TAU - s);
        }
        self.solve_monotone(|e| s - self.period(EnergyLevel::raw(e)), s)
    }

    /// Q(2π − δ), addressed by the deficit δ for precision near 2π.
    pub fn invert_deficit(&self, delta: f64) -> Result<EnergyLevel, PeriodMapError> {
        if !(0.0..TAU).contains(&delta) {
            return Err(PeriodMapError::OutOfRange(TAU - delta));
        }
        if delta == 0.0 {
            return Ok(EnergyLevel::ZERO);
        }
        self.solve_monotone(
            |e| self.period_deficit(EnergyLevel::raw(e)) - delta,
            TAU - delta,
        )
    }

    /// Root of an increasing function of e: geometric bracketing, then Brent
    /// in log e so the tolerance is relative.
    fn solve_monotone<F: Fn(f64) -> f64>(
        &self,
        f: F,
        s: f64,
    ) -> Result<EnergyLevel, PeriodMapError> {
        let mut hi = 1.0_f64;
        while f(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(PeriodMapError::OutOfRange(s));
            }
        }
        while f(0.5 * hi) >= 0.0 {
            hi *= 0.5;
            if hi < 1e-300 {
                return Ok(EnergyLevel::raw(hi));
            }
        }
        let lo = 0.5 * hi;
        let x = brent(|x| f(x.exp()), lo.ln(), hi.ln(), 1e-13, 200)?;
        Ok(EnergyLevel::raw(x.exp()))
    }

    /// Central-difference estimates (W′(u), W″(u)) with step 1% of u.
    pub fn w_slope_curvature(&self, u: f64) -> (f64, f64) {
        let h = 1e-2 * u;
        let (wm2, wm1, w0, wp1, wp2) = (
            self.w_of_u(u - 2.0 * h),
            self.w_of_u(u - h),
            self.w_of_u(u),
            self.w_of_u(u + h),
            self.w_of_u(u + 2.0 * h),
        );
        let d1 = (wm2 - 8.0 * wm1 + 8.0 * wp1 - wp2) / (12.0 * h);
        let d2 = (-wm2 + 16.0 * wm1 - 30.0 * w0 + 16.0 * wp1 - wp2) / (12.0 * h * h);
        (d1, d2)
    }
}

/// A(e) with default quadrature (the amplitude needs none).
pub fn amplitude(e: EnergyLevel, powers: PowerPair) -> f64 {
    PeriodMap::with_q_weight(powers, 1.0, QuadratureSettings::new(1, 1)).amplitude(e)
}

pub fn period(e: EnergyLevel, powers: PowerPair, settings: QuadratureSettings) -> f64 {
    PeriodMap::new(powers, settings).period(e)
}

pub fn w_of_u(u: f64, powers: PowerPair, settings: QuadratureSettings) -> f64 {
    PeriodMap::new(powers, settings).w_of_u(u)
}

pub fn psi_of_u(u: f64, powers: PowerPair) -> EnergyLevel {
    PeriodMap::with_q_weight(powers, 1.0, QuadratureSettings::new(1, 1)).psi_of_u(u)
}

pub fn invert_period(
    s: f64,
    powers: PowerPair,
    settings: QuadratureSettings,
) -> Result<EnergyLevel, PeriodMapError> {
    PeriodMap::new(powers, settings).invert_period(s)
}

/// Local power law Q(s) ≈ λ̂ (2π − s)^α fitted near s = 2π.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub alpha: f64,
    pub lambda_hat: f64,
    pub window: (f64, f64),
    /// Max relative deviation of the fitted law from the sampled Q.
    pub residual: f64,
    /// Exponent from the twofold refined grid.
    pub alpha_refined: f64,
    /// |α − 2/(p−1)|, the small-amplitude dominant-balance exponent.
    pub delta_p_exponent: f64,
    /// |α − 2/(q−1)|.
    pub delta_q_exponent: f64,
    pub refinement_stable: bool,
    /// −1/W′(0), when the one-sided slope of W converges at the origin.
    pub lambda_tilde: Option<f64>,
    /// W″(0) under the same condition.
    pub theta_tilde: Option<f64>,
}

const FIT_POINTS: usize = 17;

fn loglog_fit(
    map: &PeriodMap,
    d_lo: f64,
    d_hi: f64,
    n: usize,
) -> Result<(f64, f64, f64), PeriodMapError> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let frac = i as f64 / (n - 1) as f64;
        let delta = (d_lo.ln() + frac * (d_hi.ln() - d_lo.ln())).exp();
        let e = map.invert_deficit(delta)?.value();
        xs.push(delta.ln());
        ys.push(e.ln());
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| ((intercept + alpha * x - y).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((alpha, intercept.exp(), residual))
}

/// Derivatives of W at the origin, reported only if the finite-difference
/// estimates settle as the probe point approaches 0.
fn w_origin_derivatives(map: &PeriodMap) -> (Option<f64>, Option<f64>) {
    let probes = [1e-3, 1e-4, 1e-5];
    let est: Vec<(f64, f64)> = probes
        .iter()
        .map(|&u| {
            let h = 0.5 * u;
            let (w0, w1, w2) = (map.w_of_u(u - h), map.w_of_u(u), map.w_of_u(u + h));
            ((w2 - w0) / (2.0 * h), (w2 - 2.0 * w1 + w0) / (h * h))
        })
        .collect();
    let settled =
        |a: f64, b: f64| a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-2 * b.abs();
    let (s1, s2) = (est[1], est[2]);
    let lambda = settled(s1.0, s2.0).then(|| -1.0 / s2.0);
    let theta = settled(s1.1, s2.1).then_some(s2.1);
    (lambda, theta)
}

/// Log–log least squares of Q(s) against 2π − s on a geometric grid inside
/// `window`, checked for stability under twofold grid refinement.
pub fn fit_tail_exponent(map: &PeriodMap, window: (f64, f64)) -> Result<TailFit, PeriodMapError> {
    let (lo, hi) = window;
    let bad = |reason| Err(PeriodMapError::InvalidWindow { lo, hi, reason });
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo >= hi {
        return bad("need 0 < lo < hi");
    }
    if hi >= TAU {
        return bad("upper end must stay below 2π");
    }
    if TAU - hi > 1e-2 {
        return bad("upper end must lie within 1e-2 of 2π");
    }
    let (d_lo, d_hi) = (TAU - hi, TAU - lo);
    let (alpha, lambda_hat, residual) = loglog_fit(map, d_lo, d_hi, FIT_POINTS)?;
    let (alpha_refined, _, _) = loglog_fit(map, d_lo, d_hi, 2 * FIT_POINTS - 1)?;
    let refinement_stable = (alpha_refined - alpha).abs() <= 1e-2 * alpha.abs();
    if !refinement_stable {
        return Err(PeriodMapError::FitUnstable {
            alpha,
            alpha_refined,
        });
    }
    let (p, q) = (map.powers.p(), map.powers.q());
    let (lambda_tilde, theta_tilde) = w_origin_derivatives(map);
    Ok(TailFit {
        alpha,
        lambda_hat,
        window,
        residual,
        alpha_refined,
        delta_p_exponent: (alpha - 2.0 / (p - 1.0)).abs(),
        delta_q_exponent: (alpha - 2.0 / (q - 1.0)).abs(),
        refinement_stable,
        lambda_tilde,
        theta_tilde,
    })
}
