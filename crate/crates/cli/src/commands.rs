use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use breather_core::oscillator::{orbit_return_time, orbit_samples, EnergyLevel, OscillatorError};
use breather_core::periodmap::{fit_tail_exponent, PeriodMap, PeriodMapError, TailFit};
use breather_core::radial::{
    check_hypotheses, flatness_holds, monochromatic_profile, BreatherSpec, HypothesisReport,
    RadialError, H2_PROBES,
};
use breather_core::verify::{
    cross_oracle_suite, curl_check, linspace, monochromatic_residual, ode_residual_scaled,
    ResidualReport, VerifyError, CURL_STEP,
};

use crate::config::{coefficient_error, Scenario, ScenarioConfig};
use crate::output::{csv, json};
use crate::{Cli, CliError, Command, Mode, Outcome};

pub const ODE_TOL: f64 = 1e-8;
pub const CURL_TOL: f64 = 1e-5;
pub const CROSS_TOL: f64 = 1e-8;
pub const MONO_TOL: f64 = 1e-8;
pub const CURL_SEED: u64 = 0x0b1e_a7e4;
pub const CROSS_LEVELS: [f64; 3] = [0.1, 1.9, 10.0];
const RESIDUAL_POINTS: usize = 20;
const RESIDUAL_RADIUS: f64 = 4.0;
const CURL_POINTS: usize = 10;
const CURL_RADII: (f64, f64) = (0.5, 3.0);
const CURL_TIME: f64 = 1.0;

/// Loads the scenario named by the global flags.
pub fn load_scenario(cli: &Cli) -> Result<Scenario, CliError> {
    let config = match (&cli.scenario, &cli.config) {
        (Some(name), _) => ScenarioConfig::builtin(name)?,
        (None, Some(path)) => ScenarioConfig::from_path(path)?,
        (None, None) => {
            return Err(CliError::input(
                "either --config <path> or --scenario <name> is required",
            ))
        }
    };
    config.validate()
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    // flags are validated before the config is touched
    match &cli.command {
        Command::PeriodMap { e_min, e_max, n } => {
            let grid = energy_grid(*e_min, *e_max, *n)?;
            period_map(&load_scenario(cli)?, &grid)
        }
        Command::PhasePortrait { e_list, samples } => {
            if *samples < 2 {
                return Err(CliError::input("--samples must be at least 2"));
            }
            if let Some(e) = e_list.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
                return Err(CliError::input(format!(
                    "--e-list entries must be non-negative, got {e}"
                )));
            }
            phase_portrait(&load_scenario(cli)?, e_list, *samples)
        }
        Command::Check => check(&load_scenario(cli)?),
        Command::Breather { mode, sidecar: _ } => breather(&load_scenario(cli)?, *mode),
        Command::Verify { vp_scale } => {
            if !vp_scale.is_finite() {
                return Err(CliError::input("--vp-scale must be finite"));
            }
            verify(&load_scenario(cli)?, *vp_scale)
        }
        Command::Asymptotics {
            window_lo,
            window_hi,
        } => asymptotics(&load_scenario(cli)?, (*window_lo, *window_hi)),
    }
}

/// `n` levels from `e_min` to `e_max`, log-spaced. A zero lower end is kept
/// as the first row and the rest start at e_max/1e6.
pub fn energy_grid(e_min: f64, e_max: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(e_min.is_finite() && e_max.is_finite() && 0.0 <= e_min && e_min < e_max) {
        return Err(CliError::input(format!(
            "need 0 ≤ --e-min < --e-max, got {e_min} and {e_max}"
        )));
    }
    if n < 2 {
        return Err(CliError::input(format!("--n must be at least 2, got {n}")));
    }
    let geometric = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
        if k == 1 {
            return vec![hi];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..k)
            .map(|i| match i {
                0 => lo,
                i if i == k - 1 => hi,
                i => (a + (b - a) * i as f64 / (k - 1) as f64).exp(),
            })
            .collect()
    };
    Ok(if e_min == 0.0 {
        std::iter::once(0.0)
            .chain(geometric(e_max / 1e6, e_max, n - 1))
            .collect()
    } else {
        geometric(e_min, e_max, n)
    })
}

fn level(e: f64) -> Result<EnergyLevel, CliError> {
    EnergyLevel::new(e).map_err(|err| CliError::input(err.to_string()))
}

fn oscillator_failure(err: OscillatorError) -> CliError {
    CliError::Verification(err.to_string())
}

pub fn period_map(scen: &Scenario, grid: &[f64]) -> Result<Outcome, CliError> {
    let map = PeriodMap::new(scen.powers, scen.config.grids.quadrature);
    let rows = grid
        .iter()
        .map(|&e| {
            let lv = level(e)?;
            Ok(vec![e, map.amplitude(lv), map.period(lv)])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Outcome::ok(csv(&["e", "amplitude", "period"], rows)))
}

pub fn phase_portrait(
    scen: &Scenario,
    e_list: &[f64],
    samples: usize,
) -> Result<Outcome, CliError> {
    let mut rows = Vec::new();
    for &e in e_list {
        if e == 0.0 {
            rows.push(vec![0.0; 4]);
            continue;
        }
        let lv = level(e)?;
        let period = orbit_return_time(lv, scen.powers).map_err(oscillator_failure)?;
        let ts = linspace(0.0, period, samples);
        let states = orbit_samples(lv, &ts, scen.powers).map_err(oscillator_failure)?;
        rows.extend(
            ts.iter()
                .zip(states)
                .map(|(&t, s)| vec![e, t, s.phi, s.phidot]),
        );
    }
    Ok(Outcome::ok(csv(&["e", "t", "phi", "phidot"], rows)))
}

fn hypotheses(scen: &Scenario) -> Result<HypothesisReport, CliError> {
    check_hypotheses(&scen.coefficients, scen.config.r_max, None).map_err(coefficient_error)
}

fn failed_hypotheses(report: &HypothesisReport) -> String {
    let flags = [
        ("H1", report.h1_pass),
        ("H2", report.h2_pass),
        ("H3", report.h3_pass),
        ("H4", report.h4_pass),
    ];
    let failed: Vec<&str> = flags
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| *name)
        .collect();
    format!("{} ({})", failed.join(", "), report.details)
}

pub fn check(scen: &Scenario) -> Result<Outcome, CliError> {
    let report = hypotheses(scen)?;
    let failure = (!report.all_pass()).then(|| CliError::Hypothesis(failed_hypotheses(&report)));
    Ok(Outcome {
        body: json(&report),
        sidecar: None,
        failure,
    })
}

/// Hypothesis report plus, when H1 holds, the assembled breather. H1 is what
/// the construction needs to assign every shell an energy level; the other
/// hypotheses concern regularity and decay and are reported by `check`.
fn gated_spec(
    scen: &Scenario,
) -> Result<Result<(HypothesisReport, BreatherSpec), Outcome>, CliError> {
    let report = hypotheses(scen)?;
    if !report.h1_pass {
        let failure = CliError::Hypothesis(format!("H1 ({})", report.details));
        return Ok(Err(Outcome {
            body: json(&report),
            sidecar: None,
            failure: Some(failure),
        }));
    }
    let mut spec = BreatherSpec::new(
        scen.coefficients.clone(),
        scen.config.r_max,
        scen.config.grids.quadrature,
    )
    .map_err(radial_failure)?;
    if let Some(b) = &scen.phase_shift {
        spec = spec
            .make_phase_shifted(b.clone())
            .map_err(coefficient_error)?;
    }
    Ok(Ok((report, spec)))
}

fn radial_failure(err: RadialError) -> CliError {
    match err {
        RadialError::PeriodOutOfRange { .. } => CliError::Hypothesis(err.to_string()),
        RadialError::Eval { .. }
        | RadialError::NonPositiveCoefficient { .. }
        | RadialError::Parse(_) => coefficient_error(err),
        other => CliError::Verification(other.to_string()),
    }
}

#[derive(Debug, Serialize)]
struct Sidecar {
    mode: &'static str,
    period: f64,
    sigma0: f64,
    gamma_fit: f64,
    phase_shift: Option<String>,
    envelope_columns: [&'static str; 2],
    envelope: Vec<[f64; 2]>,
}

pub fn breather(scen: &Scenario, mode: Mode) -> Result<Outcome, CliError> {
    let (report, spec) = match gated_spec(scen)? {
        Ok(pair) => pair,
        Err(outcome) => return Ok(outcome),
    };
    let radii = linspace(0.0, scen.config.r_max, scen.config.grids.r_points);
    let mut envelope = Vec::with_capacity(radii.len());
    let body = match mode {
        Mode::Real => {
            let ts = linspace(0.0, spec.period(), scen.config.grids.t_points);
            let mut rows = Vec::with_capacity(radii.len() * ts.len());
            for &r in &radii {
                let shell = spec.shell(r).map_err(radial_failure)?;
                envelope.push([r, shell.envelope()]);
                let ys = spec.breather_samples(r, &ts).map_err(radial_failure)?;
                rows.extend(ts.iter().zip(ys).map(|(&t, y)| vec![r, t, y]));
            }
            csv(&["r", "t", "y"], rows)
        }
        Mode::Monochromatic => {
            let mut rows = Vec::with_capacity(radii.len());
            for &r in &radii {
                let y = monochromatic_profile(&scen.coefficients, r).map_err(radial_failure)?;
                envelope.push([r, y.abs()]);
                rows.push(vec![r, y]);
            }
            csv(&["r", "y"], rows)
        }
    };
    let sidecar = Sidecar {
        mode: match mode {
            Mode::Real => "real",
            Mode::Monochromatic => "monochromatic",
        },
        period: spec.period(),
        sigma0: spec.sigma0(),
        gamma_fit: report.gamma_fit,
        phase_shift: scen.config.phase_shift.clone(),
        envelope_columns: ["r", "envelope"],
        envelope,
    };
    Ok(Outcome {
        body,
        sidecar: Some(json(&sidecar)),
        failure: None,
    })
}

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_abs: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub grid: String,
}

impl CheckResult {
    fn new(name: &'static str, report: ResidualReport, tolerance: f64) -> Self {
        let max_abs = report.max_abs_residual;
        Self {
            name,
            max_abs,
            tolerance,
            pass: max_abs < tolerance,
            grid: report.grid,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FlatnessDiagnostic {
    pub radii: Vec<f64>,
    /// c, c′, c″ at each radius, with c = √e(r).
    pub rows: Vec<[f64; 3]>,
    pub decreasing: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub failed: Vec<&'static str>,
    pub vp_scale: f64,
    pub checks: Vec<CheckResult>,
    pub flatness: FlatnessDiagnostic,
}

/// Seeded points with |x| uniform in `radii` and direction uniform on the
/// sphere.
pub fn curl_points(n: usize, radii: (f64, f64), seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let rho = rng.random_range(radii.0..=radii.1);
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi = rng.random_range(0.0..TAU);
            let s = (1.0 - z * z).sqrt();
            [rho * s * phi.cos(), rho * s * phi.sin(), rho * z]
        })
        .collect()
}

fn verify_failure(err: VerifyError) -> CliError {
    match err {
        VerifyError::Radial(e) => radial_failure(e),
        other => CliError::Verification(other.to_string()),
    }
}

pub fn verify(scen: &Scenario, vp_scale: f64) -> Result<Outcome, CliError> {
    let (_, spec) = match gated_spec(scen)? {
        Ok(pair) => pair,
        Err(outcome) => return Ok(outcome),
    };
    let r_max = scen.config.r_max;
    let r_grid = linspace(0.0, r_max.min(RESIDUAL_RADIUS), RESIDUAL_POINTS);
    let t_grid = linspace(0.0, spec.period(), RESIDUAL_POINTS);
    let curl_hi = CURL_RADII.1.min(r_max - 2.0 * CURL_STEP);
    let points = curl_points(CURL_POINTS, (CURL_RADII.0.min(curl_hi), curl_hi), CURL_SEED);
    let settings = scen.config.grids.quadrature;

    let checks = vec![
        CheckResult::new(
            "ode_residual",
            ode_residual_scaled(&spec, &r_grid, &t_grid, vp_scale).map_err(verify_failure)?,
            ODE_TOL,
        ),
        CheckResult::new(
            "curl",
            curl_check(&spec, &points, CURL_TIME).map_err(verify_failure)?,
            CURL_TOL,
        ),
        CheckResult::new(
            "cross_oracle",
            cross_oracle_suite(scen.powers, &CROSS_LEVELS, settings).map_err(verify_failure)?,
            CROSS_TOL,
        ),
        CheckResult::new(
            "monochromatic_residual",
            monochromatic_residual(&scen.coefficients, &r_grid).map_err(verify_failure)?,
            MONO_TOL,
        ),
    ];
    let rows = spec.c2_flatness(&H2_PROBES).map_err(radial_failure)?;
    let flatness = FlatnessDiagnostic {
        radii: H2_PROBES.to_vec(),
        decreasing: flatness_holds(&rows),
        rows,
    };
    let failed: Vec<&'static str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let failure = (!failed.is_empty()).then(|| CliError::Verification(failed.join(", ")));
    let report = VerifyReport {
        pass: failed.is_empty(),
        failed,
        vp_scale,
        checks,
        flatness,
    };
    Ok(Outcome {
        body: json(&report),
        sidecar: None,
        failure,
    })
}

#[derive(Debug, Serialize)]
struct AsymptoticsReport {
    fit: TailFit,
    /// Exponent the single-power oscillator (q term removed) should show.
    single_power_expected: f64,
    single_power_fit: Option<TailFit>,
}

pub fn asymptotics(scen: &Scenario, window: (f64, f64)) -> Result<Outcome, CliError> {
    let settings = scen.config.grids.quadrature;
    let map = PeriodMap::new(scen.powers, settings);
    let fit = fit_tail_exponent(&map, window).map_err(|e| match e {
        PeriodMapError::InvalidWindow { .. } | PeriodMapError::OutOfRange(_) => {
            CliError::input(e.to_string())
        }
        other => CliError::Verification(other.to_string()),
    })?;
    let single = PeriodMap::single_power(scen.powers.p(), settings)
        .ok()
        .and_then(|m| fit_tail_exponent(&m, window).ok());
    let report = AsymptoticsReport {
        fit,
        single_power_expected: 2.0 / (scen.powers.p() - 1.0),
        single_power_fit: single,
    };
    Ok(Outcome::ok(json(&report)))
}
