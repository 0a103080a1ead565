use std::f64::consts::TAU;

use proptest::prelude::*;

use breather_core::coeffexpr::{parse, BinOp, ExprAst, Func, RadialProfile};
use breather_core::finite_diff::Order;
use breather_core::oscillator::{
    first_integral, integrate_orbit, orbit_return_time, orbit_samples, EnergyLevel, PowerPair,
};
use breather_core::periodmap::{PeriodMap, QuadratureSettings};
use breather_core::radial::{radial_grid, MediumCoefficients};

fn powers() -> impl Strategy<Value = PowerPair> {
    prop_oneof![
        Just(PowerPair::new(3.0, 4.0).unwrap()),
        Just(PowerPair::new(1.5, 2.5).unwrap()),
        Just(PowerPair::new(3.0, 5.0).unwrap()),
    ]
}

/// Log-uniform energy levels in [1e-6, 1e4].
fn energy() -> impl Strategy<Value = f64> {
    (-6.0f64..4.0).prop_map(|x| 10f64.powf(x))
}

fn level(e: f64) -> EnergyLevel {
    EnergyLevel::new(e).unwrap()
}

fn ast() -> impl Strategy<Value = ExprAst> {
    let leaf = prop_oneof![
        Just(ExprAst::Var),
        (0.0f64..1e3).prop_map(ExprAst::Num),
        (0u32..20).prop_map(|k| ExprAst::Num(k as f64)),
        (1e-12f64..1e-3).prop_map(ExprAst::Num),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow)
        ];
        let func = prop_oneof![
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Sqrt),
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Abs)
        ];
        prop_oneof![
            inner.clone().prop_map(|a| ExprAst::Neg(Box::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| ExprAst::Binary(
                o,
                Box::new(a),
                Box::new(b)
            )),
            (func, inner).prop_map(|(f, a)| ExprAst::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(tree in ast()) {
        let text = tree.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &tree, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn polynomial_derivatives(coeffs in prop::collection::vec(-3.0f64..3.0, 1..=7), r in 0.0f64..10.0) {
        let source = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| format!("({c})*r^{k}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let f = RadialProfile::parse(&source).unwrap();
        let d1: f64 = coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64 * r.powi(k as i32 - 1)).sum();
        let d2: f64 = coeffs
            .iter()
            .enumerate()
            .skip(2)
            .map(|(k, c)| c * (k * (k - 1)) as f64 * r.powi(k as i32 - 2))
            .sum();
        prop_assert!((f.derivative(r, Order::First).unwrap() - d1).abs() < 1e-6);
        prop_assert!((f.derivative(r, Order::Second).unwrap() - d2).abs() < 1e-6);
    }

    #[test]
    fn maps_are_monotone_and_bounded(pq in powers(), e1 in energy(), ratio in 1.001f64..10.0) {
        let map = PeriodMap::new(pq, QuadratureSettings::default());
        let e2 = e1 * ratio;
        let (a1, a2) = (map.amplitude(level(e1)), map.amplitude(level(e2)));
        let (p1, p2) = (map.period(level(e1)), map.period(level(e2)));
        prop_assert!(a1 < a2);
        prop_assert!(p1 > p2);
        prop_assert!(a1 <= e1.sqrt());
        prop_assert!(p1 > 0.0 && p1 <= TAU);
    }

    #[test]
    fn w_and_psi_identities(pq in powers(), e in energy()) {
        let map = PeriodMap::new(pq, QuadratureSettings::default());
        let u = map.u_of_amplitude(map.amplitude(level(e)));
        let p = map.period(level(e));
        prop_assert!((map.w_of_u(u) / p - 1.0).abs() < 1e-10);
        prop_assert!((map.psi_of_u(u).value() / e - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_period_round_trip(pq in powers(), e in energy()) {
        let map = PeriodMap::new(pq, QuadratureSettings::default());
        let back = map.invert_period(map.period(level(e))).unwrap().value();
        prop_assert!((back / e - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rescaling_identity(r in 0.0f64..6.0) {
        let c = MediumCoefficients::remark41();
        let f = c.at(r).unwrap();
        let (p, q) = (c.powers.p(), c.powers.q());
        prop_assert!((f.vp * f.tau.powf(p - 1.0) / f.mu - 1.0).abs() < 1e-10);
        prop_assert!((f.vq * f.tau.powf(q - 1.0) / f.mu - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_conserved(pq in powers(), e in (-4.0f64..4.0).prop_map(|x| 10f64.powf(x)), frac in 0.0f64..1.0) {
        let period = PeriodMap::new(pq, QuadratureSettings::default()).period(level(e));
        let times = [frac * period, 10.0 * frac * period, 100.0 * frac * period];
        for s in orbit_samples(level(e), &times, pq).unwrap() {
            prop_assert!((first_integral(s, pq) - e).abs() <= e * 1e-8 + 1e-10);
        }
    }

    #[test]
    fn orbit_is_odd_in_time(pq in powers(), e in energy(), t in 0.0f64..7.0) {
        let fwd = integrate_orbit(level(e), t, pq).unwrap();
        let bwd = integrate_orbit(level(e), -t, pq).unwrap();
        prop_assert!((bwd.phi + fwd.phi).abs() < 1e-9 * (1.0 + e.sqrt()));
        prop_assert!((bwd.phidot - fwd.phidot).abs() < 1e-9 * (1.0 + e.sqrt()));
    }

    #[test]
    fn orbit_is_periodic(pq in powers(), e in energy(), t in 0.0f64..7.0) {
        let period = orbit_return_time(level(e), pq).unwrap();
        let ys = orbit_samples(level(e), &[t, t + period], pq).unwrap();
        prop_assert!((ys[0].phi - ys[1].phi).abs() < 1e-8 * (1.0 + e.sqrt()));
        prop_assert!((ys[0].phidot - ys[1].phidot).abs() < 1e-8 * (1.0 + e.sqrt()));
    }

    #[test]
    fn amplitude_is_reached(pq in powers(), e in energy()) {
        let map = PeriodMap::new(pq, QuadratureSettings::default());
        let peak = breather_core::oscillator::orbit_peak(level(e), pq).unwrap();
        prop_assert!((peak / map.amplitude(level(e)) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn radial_grid_is_sorted_and_spans() {
    for r_max in [0.5, 1.0, 6.0, 10.0] {
        let g = radial_grid(r_max, 1000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), r_max);
        assert!(g[0] <= 1e-3);
    }
}

#[test]
fn quadrature_refinement_is_converged() {
    for pq in [
        PowerPair::new(3.0, 4.0).unwrap(),
        PowerPair::new(1.5, 2.5).unwrap(),
    ] {
        let base = PeriodMap::new(pq, QuadratureSettings::default());
        let fine = PeriodMap::new(pq, QuadratureSettings::default().doubled());
        for e in [1e-4, 1e-2, 1.0, 1e2, 1e4] {
            let (a, b) = (base.period(level(e)), fine.period(level(e)));
            assert!((a / b - 1.0).abs() < 1e-10, "e={e}");
        }
    }
}
