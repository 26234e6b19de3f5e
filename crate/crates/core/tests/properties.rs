mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use crncalc::analysis::{estimate_rate_with, FitOptions, RateEstimate, SweepPoint, SweepReport};
use crncalc::compiler::{compile_str, parse, CircuitInstance, CompileOptions, Decls, Expr, InitOptions, InputSignal};
use crncalc::crn::SpeciesId;
use crncalc::library::{mk_exp_nonneg, mk_log_system3, Rails};
use crncalc::sim::{integrate, IntegratorConfig, StepStats, Trajectory};

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|n| Expr::Lit(n as f64 / 8.0)),
        Just(Expr::Lit(std::f64::consts::E)),
        prop::sample::select(vec!["a", "b", "x1", "rate_k"]).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Div(b(x), b(y))),
            inner.clone().prop_map(move |x| Expr::Neg(b(x))),
            inner.clone().prop_map(move |x| Expr::Exp(b(x))),
            inner.clone().prop_map(move |x| Expr::Ln(b(x))),
            (inner.clone(), 1u32..5).prop_map(move |(x, m)| Expr::Root(b(x), m)),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Max(b(x), b(y))),
            (inner.clone(), inner).prop_map(move |(x, y)| Expr::AbsDiff(b(x), b(y))),
        ]
    })
}

fn synthetic(limit: f64, c: f64, rho: f64, t_end: f64) -> Trajectory {
    let times = IntegratorConfig::default().t_end(t_end).times();
    Trajectory {
        species: vec![SpeciesId::new("U").unwrap()],
        states: times.iter().map(|t| vec![limit + c * (-rho * t).exp()]).collect(),
        times,
        step_errors: vec![],
        stats: StepStats::default(),
    }
}

fn point(rate: f64, r2: f64) -> SweepPoint {
    SweepPoint {
        inputs: BTreeMap::new(),
        limit: 0.0,
        result: Ok(RateEstimate {
            fitted_rate: rate,
            fit_window: (0.0, 1.0),
            r_squared: r2,
            limit_used: 0.0,
            floor_hit: true,
            points: 10,
        }),
    }
}

proptest! {
    #[test]
    fn display_then_parse_is_identity(e in expr()) {
        let text = e.to_string();
        prop_assert_eq!(parse(&text).unwrap(), e, "{}", text);
    }

    #[test]
    fn fitted_rate_ignores_output_scale(
        limit in 1.0f64..50.0,
        c in 0.1f64..5.0,
        rho in 0.2f64..5.0,
        k in 1.0f64..1000.0,
    ) {
        let t_end = 40.0 / rho.min(1.0);
        let u = Rails::Single(SpeciesId::new("U").unwrap());
        let opts = FitOptions::default();
        let base = estimate_rate_with(&synthetic(limit, c, rho, t_end), &u, limit, &opts).unwrap();
        let scaled = estimate_rate_with(&synthetic(k * limit, k * c, rho, t_end), &u, k * limit, &opts).unwrap();
        prop_assert!((base.fitted_rate - scaled.fitted_rate).abs() <= 1e-9 * base.fitted_rate,
            "{} vs {}", base.fitted_rate, scaled.fitted_rate);
        prop_assert!((base.fitted_rate - rho).abs() < 1e-6);
    }

    #[test]
    fn verdict_is_monotone_in_threshold(
        pts in prop::collection::vec((0.01f64..5.0, 0.95f64..1.0), 1..6),
        lo in 0.0f64..3.0,
        gap in 0.0f64..3.0,
    ) {
        let report = SweepReport::new(pts.iter().map(|&(r, q)| point(r, q)).collect(), lo + gap);
        if report.input_independent {
            prop_assert!(report.with_threshold(lo).input_independent);
        }
        let strict = report.with_threshold(lo);
        prop_assert_eq!(strict.min_rate, report.min_rate);
    }

    #[test]
    fn predicted_rate_is_monotone_and_capped(rho in 0.01f64..10.0, extra in 0.0f64..10.0) {
        let decls = Decls::parse(&["a:real", "b:nonneg(0.1,100)"]).unwrap();
        let c = compile_str("exp(a)*ln(b) + max(exp(a), b)", &decls, &CompileOptions::default()).unwrap();
        let (p, q) = (c.predicted_rate(rho), c.predicted_rate(rho + extra));
        prop_assert!(p <= q);
        prop_assert!(p <= rho);
        prop_assert!(q <= c.predicted_rate(f64::INFINITY));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exp_conserves_ln_x_minus_z(a in 0.0f64..4.0, x0 in 0.2f64..4.0, z0 in -2.0f64..2.0) {
        let c = CircuitInstance::from_module(&mk_exp_nonneg());
        let init = InitOptions::default().with("X", x0).unwrap().with("Z", z0).unwrap().forced();
        let signals = BTreeMap::from([("a".to_string(), InputSignal::Constant(a))]);
        let setup = c.setup(&signals, &init).unwrap();
        let traj = integrate(&setup.ode, &setup.state, &IntegratorConfig::default()).unwrap();
        for law in &c.conservation {
            prop_assert!(crncalc::analysis::check_conservation(&traj, law) < 1e-6);
        }
        let end = traj.output_value(&c.output, traj.len() - 1);
        prop_assert!((end - x0 * (a - z0).exp()).abs() <= 1e-6 * end.max(1.0));
    }

    #[test]
    fn system3_matches_reference_integration(a in 0.2f64..5.0) {
        let c = CircuitInstance::from_module(&mk_log_system3()).relax_domain();
        let setup = c.setup(&BTreeMap::from([("a".to_string(), InputSignal::Constant(a))]), &InitOptions::default()).unwrap();
        let traj = integrate(&setup.ode, &setup.state, &IntegratorConfig::oracle().t_end(10.0)).unwrap();
        let f = common::polynomial_rhs(&setup.ode);
        let reference = common::rk4(&f, &setup.state, 10.0, 10_000);
        for (ours, theirs) in traj.last().iter().zip(&reference) {
            prop_assert!((ours - theirs).abs() <= 1e-9 * theirs.abs().max(1.0));
        }
    }

    #[test]
    fn dual_rail_identity_tracks_signed_inputs(a in -3.0f64..3.0) {
        let decls = Decls::parse(&["a:real"]).unwrap();
        let c = compile_str("a", &decls, &CompileOptions::default()).unwrap();
        let init = c.resolve_init(&BTreeMap::from([("a".to_string(), a)])).unwrap();
        let traj = integrate(&c.ode, &init, &IntegratorConfig::default()).unwrap();
        let end = traj.output_value(&c.output, traj.len() - 1);
        prop_assert!((end - a).abs() < 1e-6);
        for v in traj.last() {
            prop_assert!(*v >= -1e-12);
        }
    }
}
