//! Independent checks on constructed solutions: residuals of the radial
//! equation, vanishing curl of the vector field, and agreement of the
//! quadrature maps with direct integration.

use serde::Serialize;
use thiserror::Error;

use crate::oscillator::{
    ode_rhs, orbit_peak, orbit_return_time, signed_pow, EnergyLevel, OscillatorError, PowerPair,
};
use crate::periodmap::{PeriodMap, QuadratureSettings};
use crate::radial::{monochromatic_profile, BreatherSpec, MediumCoefficients, RadialError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error("curl probe point at distance {0} from the origin, need at least 1e-2")]
    PointTooClose(f64),
    #[error("energy levels must be positive, got {0}")]
    NonPositiveEnergy(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResidual {
    pub label: &'static str,
    pub coords: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs_residual: f64,
    pub grid: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<PointResidual>>,
}

impl ResidualReport {
    fn from_points(grid: String, points: Vec<PointResidual>) -> Self {
        let max_abs_residual = points.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
        Self {
            max_abs_residual,
            grid,
            per_point: Some(points),
        }
    }

    pub fn without_points(mut self) -> Self {
        self.per_point = None;
        self
    }
}

/// `n` equispaced points on [a, b], endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// ρ̃ÿ + μ̃y + ṽ_p|y|^{p−1}y + ṽ_q|y|^{q−1}y on the grid, with ÿ = τ̃σ̃²φ̈ taken
/// from the oscillator right-hand side rather than by differencing in t.
pub fn ode_residual(
    spec: &BreatherSpec,
    r_grid: &[f64],
    t_grid: &[f64],
) -> Result<ResidualReport, VerifyError> {
    ode_residual_scaled(spec, r_grid, t_grid, 1.0)
}

/// [`ode_residual`] with ṽ_p multiplied by `vp_scale`; any scale other than 1
/// breaks the coefficient relation the construction depends on.
pub fn ode_residual_scaled(
    spec: &BreatherSpec,
    r_grid: &[f64],
    t_grid: &[f64],
    vp_scale: f64,
) -> Result<ResidualReport, VerifyError> {
    let powers = spec.powers();
    let (p, q) = (powers.p(), powers.q());
    let mut points = Vec::with_capacity(r_grid.len() * t_grid.len());
    for &r in r_grid {
        let shell = spec.shell(r)?;
        let f = shell.fields;
        let states = spec.shell_states(&shell, t_grid)?;
        for (&t, s) in t_grid.iter().zip(states) {
            let y = f.tau * s.phi;
            let ydd = f.tau * f.sigma * f.sigma * ode_rhs(s, powers).phidot;
            let res = f.rho * ydd
                + f.mu * y
                + vp_scale * f.vp * signed_pow(y, p)
                + f.vq * signed_pow(y, q);
            points.push(PointResidual {
                label: "ode",
                coords: vec![r, t],
                value: res,
            });
        }
    }
    let grid = format!("{} radii × {} times", r_grid.len(), t_grid.len());
    Ok(ResidualReport::from_points(grid, points))
}

/// −(2π/T)²ρ̃ + μ̃ + ṽ_p|y|^{p−1} + ṽ_q|y|^{q−1} for the monochromatic profile.
pub fn monochromatic_residual(
    coeffs: &MediumCoefficients,
    r_grid: &[f64],
) -> Result<ResidualReport, VerifyError> {
    monochromatic_residual_scaled(coeffs, r_grid, 1.0)
}

/// [`monochromatic_residual`] with the profile multiplied by `y_scale`.
pub fn monochromatic_residual_scaled(
    coeffs: &MediumCoefficients,
    r_grid: &[f64],
    y_scale: f64,
) -> Result<ResidualReport, VerifyError> {
    let (p, q) = (coeffs.powers.p(), coeffs.powers.q());
    let sigma0 = coeffs.sigma(0.0)?;
    // (2π/T)² with T = 2πσ(0)
    let omega2 = 1.0 / (sigma0 * sigma0);
    let mut points = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let f = coeffs.at(r)?;
        let y = y_scale * monochromatic_profile(coeffs, r)?;
        let res =
            -omega2 * f.rho + f.mu + f.vp * y.abs().powf(p - 1.0) + f.vq * y.abs().powf(q - 1.0);
        points.push(PointResidual {
            label: "monochromatic",
            coords: vec![r],
            value: res,
        });
    }
    Ok(ResidualReport::from_points(
        format!("{} radii", r_grid.len()),
        points,
    ))
}

/// Central-difference curl of `field` at `x` with step `h`.
pub fn fd_curl<E, F>(field: F, x: [f64; 3], h: f64) -> Result<[f64; 3], E>
where
    F: Fn([f64; 3]) -> Result<[f64; 3], E>,
{
    // jac[i][j] = ∂F_i/∂x_j
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let (mut xp, mut xm) = (x, x);
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (field(xp)?, field(xm)?);
        for i in 0..3 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok([
        jac[2][1] - jac[1][2],
        jac[0][2] - jac[2][0],
        jac[1][0] - jac[0][1],
    ])
}

pub const CURL_STEP: f64 = 1e-4;
const CURL_MIN_RADIUS: f64 = 1e-2;

/// Largest curl component of an arbitrary field over `points`.
pub fn curl_of_field<E, F>(field: F, points: &[[f64; 3]]) -> Result<ResidualReport, VerifyError>
where
    F: Fn([f64; 3]) -> Result<[f64; 3], E>,
    VerifyError: From<E>,
{
    let mut out = Vec::with_capacity(points.len());
    for &x in points {
        let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if norm < CURL_MIN_RADIUS {
            return Err(VerifyError::PointTooClose(norm));
        }
        let c = fd_curl(&field, x, CURL_STEP)?;
        let value = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        out.push(PointResidual {
            label: "curl",
            coords: x.to_vec(),
            value,
        });
    }
    Ok(ResidualReport::from_points(
        format!("{} points, step {CURL_STEP}", points.len()),
        out,
    ))
}

/// Finite-difference curl of the breather field at time `t`.
pub fn curl_check(
    spec: &BreatherSpec,
    points: &[[f64; 3]],
    t: f64,
) -> Result<ResidualReport, VerifyError> {
    curl_of_field(|x| spec.field_eval(x, t), points)
}

/// The rotation field (−x₂, x₁, 0), whose curl is (0, 0, 2).
pub fn rotation_field(x: [f64; 3]) -> Result<[f64; 3], VerifyError> {
    Ok([-x[1], x[0], 0.0])
}

/// Relative gaps between the quadrature period and the integrated return
/// time, and between the amplitude map and the integrated turning point.
pub fn cross_oracle_suite(
    powers: PowerPair,
    e_list: &[f64],
    settings: QuadratureSettings,
) -> Result<ResidualReport, VerifyError> {
    let map = PeriodMap::new(powers, settings);
    let mut out = Vec::with_capacity(2 * e_list.len());
    for &e in e_list {
        if e.is_nan() || e <= 0.0 {
            return Err(VerifyError::NonPositiveEnergy(e));
        }
        let level = EnergyLevel::new(e)?;
        let period = map.period(level);
        let rt = orbit_return_time(level, powers)?;
        out.push(PointResidual {
            label: "period",
            coords: vec![e],
            value: (period - rt) / period,
        });
        let amplitude = map.amplitude(level);
        let peak = orbit_peak(level, powers)?;
        out.push(PointResidual {
            label: "amplitude",
            coords: vec![e],
            value: (peak - amplitude) / amplitude,
        });
    }
    Ok(ResidualReport::from_points(
        format!("{} energy levels", e_list.len()),
        out,
    ))
}
