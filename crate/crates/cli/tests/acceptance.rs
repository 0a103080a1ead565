//! Acceptance suite. Each criterion prints one PASS/FAIL line with the
//! measured quantities and its wall time; a criterion also fails if it
//! exceeds its time budget.
//!
//! Criteria 6 and 8 fail for the built-in scenario: the coefficient
//! 1 − σ̃ ~ r⁴ makes f = (1 − σ̃)^{1/3} grow like r^{4/3} and c = √e like r²,
//! so neither the second derivative of f nor that of c tends to zero at the
//! origin. They are reported as failures and listed in `EXPECTED_FAILURES`;
//! the run succeeds only when the failing set is exactly that list.

use std::f64::consts::TAU;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use breather_core::coeffexpr::{parse, RadialProfile};
use breather_core::finite_diff::Order;
use breather_core::oscillator::{orbit_return_time, EnergyLevel, PowerPair};
use breather_core::periodmap::{fit_tail_exponent, PeriodMap, QuadratureSettings};
use breather_core::radial::{
    flatness_holds, invert_l, l_map, BreatherSpec, MediumCoefficients, H2_PROBES, REMARK41_MU,
    REMARK41_RHO, REMARK41_VQ,
};
use breather_core::verify::{
    curl_check, curl_of_field, linspace, monochromatic_residual, ode_residual, ode_residual_scaled,
    rotation_field,
};
use breather_forge::commands::{curl_points, CURL_SEED};

const EXPECTED_FAILURES: [u32; 2] = [6, 8];

type Verdict = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn level(e: f64) -> EnergyLevel {
    EnergyLevel::new(e).unwrap()
}

fn pq(p: f64, q: f64) -> PowerPair {
    PowerPair::new(p, q).unwrap()
}

fn sweep_grid() -> Vec<f64> {
    (0..200)
        .map(|i| 10f64.powf(-6.0 + 10.0 * i as f64 / 199.0))
        .collect()
}

fn builtin_spec() -> BreatherSpec {
    BreatherSpec::new(
        MediumCoefficients::remark41(),
        6.0,
        QuadratureSettings::default(),
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn period_anchor() -> Verdict {
    let p = PeriodMap::new(pq(3.0, 4.0), QuadratureSettings::default()).period(level(1e-10));
    check(
        (p - TAU).abs() <= 1e-4,
        format!("P(1e-10) − 2π = {:.3e}", p - TAU),
    )
}

fn oracle_equivalence() -> Verdict {
    let mut worst: f64 = 0.0;
    for powers in [pq(3.0, 4.0), pq(1.5, 2.5)] {
        let map = PeriodMap::new(powers, QuadratureSettings::default());
        for e in [1e-2, 0.1, 1.9, 10.0, 1e3] {
            let period = map.period(level(e));
            let rt = orbit_return_time(level(e), powers).map_err(|err| err.to_string())?;
            worst = worst.max(rel(rt, period));
        }
    }
    check(worst < 1e-8, format!("max relative gap {worst:.3e}"))
}

fn monotonicity() -> Verdict {
    let grid = sweep_grid();
    let mut problems = Vec::new();
    for powers in [pq(3.0, 4.0), pq(1.5, 2.5)] {
        let map = PeriodMap::new(powers, QuadratureSettings::default());
        let a: Vec<f64> = grid.iter().map(|&e| map.amplitude(level(e))).collect();
        let p: Vec<f64> = grid.iter().map(|&e| map.period(level(e))).collect();
        let tag = format!("(p, q) = ({}, {})", powers.p(), powers.q());
        if !a.windows(2).all(|w| w[0] < w[1]) {
            problems.push(format!("{tag}: A not increasing"));
        }
        if !p.windows(2).all(|w| w[0] > w[1]) {
            problems.push(format!("{tag}: P not decreasing"));
        }
        if !a.iter().zip(&grid).all(|(a, e)| *a <= e.sqrt()) {
            problems.push(format!("{tag}: A > √e"));
        }
        if !p.iter().all(|&x| x > 0.0 && x <= TAU) {
            problems.push(format!("{tag}: P outside (0, 2π]"));
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            "200 levels, 2 power pairs".into()
        } else {
            problems.join("; ")
        },
    )
}

fn round_trip() -> Verdict {
    let map = PeriodMap::new(pq(3.0, 4.0), QuadratureSettings::default());
    let mut worst: f64 = 0.0;
    for e in sweep_grid() {
        let back = map
            .invert_period(map.period(level(e)))
            .map_err(|err| err.to_string())?;
        worst = worst.max(rel(back.value(), e));
    }
    check(worst < 1e-8, format!("max relative error {worst:.3e}"))
}

fn identities() -> Verdict {
    let map = PeriodMap::new(pq(3.0, 4.0), QuadratureSettings::default());
    let (mut w_err, mut psi_err): (f64, f64) = (0.0, 0.0);
    for e in sweep_grid() {
        let u = map.u_of_amplitude(map.amplitude(level(e)));
        w_err = w_err.max(rel(map.w_of_u(u), map.period(level(e))));
        psi_err = psi_err.max(rel(map.psi_of_u(u).value(), e));
    }
    check(
        w_err < 1e-10 && psi_err < 1e-10,
        format!("W identity {w_err:.3e}, Ψ identity {psi_err:.3e}"),
    )
}

fn builtin_hypotheses() -> Verdict {
    let out = Command::new(env!("CARGO_BIN_EXE_breather-forge"))
        .args(["check", "--scenario", "remark41"])
        .output()
        .map_err(|e| e.to_string())?;
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let flag = |k: &str| report[k].as_bool().unwrap_or(false);
    let sigma0 = report["sigma0"].as_f64().unwrap_or(f64::NAN);
    let code = out.status.code().unwrap_or(-1);
    let ok = code == 0
        && ["h1_pass", "h2_pass", "h3_pass", "h4_pass"]
            .iter()
            .all(|k| flag(k))
        && (sigma0 - 1.0).abs() < 1e-6;
    let diag = &report["c2_diagnostics"];
    check(
        ok,
        format!(
            "exit {code}, H1..H4 = {} {} {} {}, σ(0) = {sigma0}, f/f′/f″ at r = 1e-3: {diag}",
            flag("h1_pass"),
            flag("h2_pass"),
            flag("h3_pass"),
            flag("h4_pass")
        ),
    )
}

fn breather_residual() -> Verdict {
    let spec = builtin_spec();
    let rg = linspace(0.0, 4.0, 20);
    let tg = linspace(0.0, spec.period(), 20);
    let honest = ode_residual(&spec, &rg, &tg)
        .map_err(|e| e.to_string())?
        .max_abs_residual;
    let bad = ode_residual_scaled(&spec, &rg, &tg, 1.01)
        .map_err(|e| e.to_string())?
        .max_abs_residual;
    check(
        honest < 1e-8 && bad > 1e-3,
        format!("residual {honest:.3e}, corrupted ṽ_p control {bad:.3e}"),
    )
}

fn periodicity_and_flatness() -> Verdict {
    let spec = builtin_spec();
    let period = spec.period();
    let ts = linspace(0.0, period, 50);
    let shifted: Vec<f64> = ts.iter().map(|t| t + period).collect();
    let mut gap: f64 = 0.0;
    for r in linspace(0.0, spec.r_max(), 50) {
        let a = spec.breather_samples(r, &ts).map_err(|e| e.to_string())?;
        let b = spec
            .breather_samples(r, &shifted)
            .map_err(|e| e.to_string())?;
        gap = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(gap, f64::max);
    }
    let rows = spec.c2_flatness(&H2_PROBES).map_err(|e| e.to_string())?;
    let flat = flatness_holds(&rows);
    let fmt = |k: usize| {
        rows.iter()
            .map(|row| format!("{:.3e}", row[k]))
            .collect::<Vec<_>>()
            .join(", ")
    };
    check(
        gap < 1e-8 && flat,
        format!(
            "periodicity gap {gap:.3e}; at r = 1e-1, 1e-2, 1e-3: c = [{}], c′ = [{}], c″ = [{}]",
            fmt(0),
            fmt(1),
            fmt(2)
        ),
    )
}

fn decay() -> Verdict {
    let spec = builtin_spec();
    let ts = linspace(0.0, spec.period(), 801);
    let mut weighted = Vec::new();
    let mut worst: f64 = 0.0;
    for r in linspace(2.0, 6.0, 41) {
        let shell = spec.shell(r).map_err(|e| e.to_string())?;
        let peak = spec
            .breather_samples(r, &ts)
            .map_err(|e| e.to_string())?
            .into_iter()
            .fold(0.0, |m: f64, y| m.max(y.abs()));
        let env = shell.envelope();
        if env > 0.0 {
            worst = worst.max(rel(peak, env));
        } else if peak != 0.0 {
            worst = f64::INFINITY;
        }
        weighted.push(peak * r.exp());
    }
    let decreasing = weighted.windows(2).all(|w| w[1] <= w[0]);
    check(
        decreasing && worst < 1e-3,
        format!("max|y|·e^r non-increasing: {decreasing}, envelope mismatch {worst:.3e}"),
    )
}

fn curl_vanishing() -> Verdict {
    let spec = builtin_spec();
    let points = curl_points(10, (0.5, 3.0), CURL_SEED);
    let curl = curl_check(&spec, &points, 1.0)
        .map_err(|e| e.to_string())?
        .max_abs_residual;
    let rotation = curl_of_field(rotation_field, &points)
        .map_err(|e| e.to_string())?
        .max_abs_residual;
    check(
        curl < 1e-5 && (rotation - 2.0).abs() <= 1e-6,
        format!("curl {curl:.3e}, rotation control {rotation:.9}"),
    )
}

fn monochromatic() -> Verdict {
    let coeffs = MediumCoefficients::remark41();
    let res = monochromatic_residual(&coeffs, &linspace(0.0, 4.0, 81))
        .map_err(|e| e.to_string())?
        .max_abs_residual;
    let mut worst: f64 = 0.0;
    for tau in [0.3, 1.0, 1.7] {
        for w in [1e-12, 1e-6, 1e-2, 1.0, 1e2, 1e6] {
            let z = invert_l(w, tau, coeffs.powers).map_err(|e| e.to_string())?;
            worst = worst.max(rel(l_map(z, tau, coeffs.powers).0, w));
        }
    }
    check(
        res < 1e-8 && worst < 1e-10,
        format!("residual {res:.3e}, l round trip {worst:.3e}"),
    )
}

fn phase_shift_family() -> Verdict {
    let b = RadialProfile::parse("cos(r^2)").map_err(|e| e.to_string())?;
    let spec = builtin_spec()
        .make_phase_shifted(b)
        .map_err(|e| e.to_string())?;
    let rg = linspace(0.0, 4.0, 20);
    let tg = linspace(0.0, spec.period(), 20);
    let res = ode_residual(&spec, &rg, &tg)
        .map_err(|e| e.to_string())?
        .max_abs_residual;
    check(res < 1e-8, format!("shifted residual {res:.3e}"))
}

fn tail_exponent() -> Verdict {
    let window = (TAU - 1e-2, TAU - 1e-4);
    let map = PeriodMap::new(pq(3.0, 4.0), QuadratureSettings::default());
    let fit = fit_tail_exponent(&map, window).map_err(|e| e.to_string())?;
    let single =
        PeriodMap::single_power(3.0, QuadratureSettings::default()).map_err(|e| e.to_string())?;
    let single_fit = fit_tail_exponent(&single, window).map_err(|e| e.to_string())?;
    let stable = fit.refinement_stable && rel(fit.alpha_refined, fit.alpha) <= 1e-2;
    let deltas = fit.delta_p_exponent.is_finite() && fit.delta_q_exponent.is_finite();
    let single_ok = rel(single_fit.alpha, 1.0) <= 2e-2;
    check(
        stable && deltas && single_ok,
        format!(
            "α = {:.5} (refined {:.5}), |α − 1| = {:.3e}, |α − 2/3| = {:.3e}, single power α = {:.5}",
            fit.alpha, fit.alpha_refined, fit.delta_p_exponent, fit.delta_q_exponent, single_fit.alpha
        ),
    )
}

type Oracle = fn(f64) -> f64;

fn golden_corpus() -> Vec<(&'static str, Oracle)> {
    vec![
        (REMARK41_RHO, |r| {
            (2.0 * r * r + 1.0) / (1.0 - r.powi(4) * (-r.powi(4)).exp()).powi(2)
        }),
        (REMARK41_MU, |r| 2.0 * r * r + 1.0),
        (REMARK41_VQ, |r| r * r * (r * r).exp() + 1.0),
        ("1", |_| 1.0),
        ("r", |r| r),
        ("-r^2", |r| -(r * r)),
        ("2^3^2", |_| 512.0),
        ("2^-1", |_| 0.5),
        ("(1+r)*(1-r)", |r| (1.0 + r) * (1.0 - r)),
        ("8/4/2", |_| 1.0),
        ("1-2-3", |_| -4.0),
        ("exp(-r^2)", |r| (-(r * r)).exp()),
        ("sqrt(1+r^2)", |r| (1.0 + r * r).sqrt()),
        ("log(2+r)", |r| (2.0 + r).ln()),
        ("sin(r)*cos(r)", |r| r.sin() * r.cos()),
        ("abs(1-r)", |r| (1.0 - r).abs()),
        ("1.5e-3*r", |r| 1.5e-3 * r),
        (".5 + 2.", |_| 2.5),
        ("r^0.5", |r| r.sqrt()),
        ("cos(r^2)", |r| (r * r).cos()),
        ("1/(1+exp(r))", |r| 1.0 / (1.0 + r.exp())),
        ("--r", |r| r),
        ("3*r^2 - 2*r + 7", |r| 3.0 * r * r - 2.0 * r + 7.0),
    ]
}

fn parser() -> Verdict {
    let corpus = golden_corpus();
    let mut problems = Vec::new();
    for (src, oracle) in &corpus {
        let ast = match parse(src) {
            Ok(a) => a,
            Err(e) => {
                problems.push(format!("{src}: {e}"));
                continue;
            }
        };
        if parse(&ast.to_string()).as_ref() != Ok(&ast) {
            problems.push(format!("{src}: round trip"));
        }
        for r in [0.0, 0.25, 1.3, 3.0] {
            let want = oracle(r);
            let got = ast.eval(r).map_err(|e| e.to_string());
            if !matches!(got, Ok(v) if (v - want).abs() <= 1e-14 * want.abs().max(1.0)) {
                problems.push(format!("{src} at r = {r}: {got:?} vs {want}"));
            }
        }
    }
    let mut fd_worst: f64 = 0.0;
    let polys: [&[f64]; 4] = [
        &[1.0],
        &[0.0, -2.0, 1.0],
        &[7.0, 0.0, 0.0, -1.0, 0.5],
        &[-1.0, 2.0, -3.0, 0.25, 1.0, -0.5, 0.125],
    ];
    for coeffs in polys {
        let src = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| format!("({c})*r^{k}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let f = RadialProfile::parse(&src).map_err(|e| e.to_string())?;
        for r in linspace(0.0, 10.0, 41) {
            let d1: f64 = coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64 * r.powi(k as i32 - 1))
                .sum();
            let d2: f64 = coeffs
                .iter()
                .enumerate()
                .skip(2)
                .map(|(k, c)| c * (k * (k - 1)) as f64 * r.powi(k as i32 - 2))
                .sum();
            let e1 = (f.derivative(r, Order::First).map_err(|e| e.to_string())? - d1).abs();
            let e2 = (f.derivative(r, Order::Second).map_err(|e| e.to_string())? - d2).abs();
            fd_worst = fd_worst.max(e1).max(e2);
        }
    }
    if fd_worst >= 1e-6 {
        problems.push(format!("FD error {fd_worst:.3e}"));
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} expressions, FD error {fd_worst:.3e}", corpus.len())
        } else {
            problems.join("; ")
        },
    )
}

fn criteria() -> Vec<Criterion> {
    let s = Duration::from_secs;
    vec![
        Criterion {
            id: 1,
            name: "period anchor",
            budget: s(1),
            run: period_anchor,
        },
        Criterion {
            id: 2,
            name: "oracle equivalence",
            budget: s(10),
            run: oracle_equivalence,
        },
        Criterion {
            id: 3,
            name: "monotonicity sweeps",
            budget: s(10),
            run: monotonicity,
        },
        Criterion {
            id: 4,
            name: "inverse period round trip",
            budget: s(10),
            run: round_trip,
        },
        Criterion {
            id: 5,
            name: "W and Ψ identities",
            budget: s(5),
            run: identities,
        },
        Criterion {
            id: 6,
            name: "built-in scenario hypotheses",
            budget: s(5),
            run: builtin_hypotheses,
        },
        Criterion {
            id: 7,
            name: "breather residual",
            budget: s(30),
            run: breather_residual,
        },
        Criterion {
            id: 8,
            name: "periodicity and flatness",
            budget: s(30),
            run: periodicity_and_flatness,
        },
        Criterion {
            id: 9,
            name: "decay",
            budget: s(30),
            run: decay,
        },
        Criterion {
            id: 10,
            name: "curl vanishing",
            budget: s(5),
            run: curl_vanishing,
        },
        Criterion {
            id: 11,
            name: "monochromatic",
            budget: s(5),
            run: monochromatic,
        },
        Criterion {
            id: 12,
            name: "phase-shift family",
            budget: s(30),
            run: phase_shift_family,
        },
        Criterion {
            id: 13,
            name: "tail exponent",
            budget: s(30),
            run: tail_exponent,
        },
        Criterion {
            id: 14,
            name: "parser",
            budget: s(1),
            run: parser,
        },
    ]
}

fn main() -> ExitCode {
    // libtest-style flags such as --list or filters are accepted and ignored
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut failed = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let verdict = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match verdict {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {tag} {} [{:.2} s]: {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(c.id);
        }
    }
    let unexpected: Vec<u32> = failed
        .iter()
        .copied()
        .filter(|id| !EXPECTED_FAILURES.contains(id))
        .collect();
    let missing: Vec<u32> = EXPECTED_FAILURES
        .iter()
        .copied()
        .filter(|id| !failed.contains(id))
        .collect();
    println!(
        "acceptance: {} of 14 passed; failed {:?}; expected failures {:?}",
        14 - failed.len(),
        failed,
        EXPECTED_FAILURES
    );
    if unexpected.is_empty() && missing.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}, expected failures that passed {missing:?}");
        ExitCode::FAILURE
    }
}
