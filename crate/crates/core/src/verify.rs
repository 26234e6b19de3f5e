//! Acceptance checks run by `crncalc verify`.
//!
//! Each check is self-contained, pins its own tolerances and returns a one
//! line summary of what it measured.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{check_conservation, estimate_limit, estimate_rate_with, grid_1d, sweep, FitOptions, RateEstimate, SweepReport};
use crate::compiler::{compile_str, CircuitInstance, CompileOptions, Decls, InitOptions, InputSignal};
use crate::crn::{parse_network, sp, ReactionNetwork};
use crate::library::*;
use crate::sim::{integrate, IntegratorConfig, StepStats, Trajectory};

type Outcome = Result<String, String>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Skips the high-accuracy confirmation runs.
    pub quick: bool,
}

#[derive(Clone, Copy)]
pub struct Check {
    pub name: &'static str,
    pub criterion: u32,
    run: fn(&VerifyOptions) -> Outcome,
}

impl fmt::Debug for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Check({} #{})", self.name, self.criterion)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub criterion: u32,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<20} {:>7.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub fn catalog() -> Vec<Check> {
    let c = |name, criterion, run| Check { name, criterion, run };
    vec![
        c("exp-closed-form", 1, exp_closed_form),
        c("exp-rate", 2, exp_rate),
        c("init-sensitivity", 3, init_sensitivity),
        c("system1-logistic", 4, system1_logistic),
        c("system1r", 5, system1r),
        c("system2", 6, system2),
        c("system3", 7, system3),
        c("system4-dual-rail", 8, system4_dual_rail),
        c("system5", 9, system5),
        c("system6", 10, system6),
        c("composite", 11, composite),
        c("mass-action", 12, mass_action),
        c("conservation", 13, conservation),
        c("counterexample", 14, counterexample),
        c("fitter-self-test", 15, fitter_self_test),
    ]
}

/// `all`, a check name, or a criterion number.
pub fn select(selector: &str) -> Result<Vec<Check>, String> {
    let all = catalog();
    if selector == "all" {
        return Ok(all);
    }
    let hit: Vec<Check> = all
        .iter()
        .filter(|c| c.name == selector || selector.parse::<u32>().is_ok_and(|n| n == c.criterion))
        .copied()
        .collect();
    if hit.is_empty() {
        let names: Vec<&str> = all.iter().map(|c| c.name).collect();
        return Err(format!("unknown check `{selector}`; expected `all` or one of {}", names.join(", ")));
    }
    Ok(hit)
}

impl Check {
    pub fn run(&self, opts: &VerifyOptions) -> CheckResult {
        let start = Instant::now();
        let outcome = (self.run)(opts);
        let seconds = start.elapsed().as_secs_f64();
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        CheckResult { name: self.name, criterion: self.criterion, passed, detail, seconds }
    }
}

/// Runs checks concurrently; results keep the input order.
pub fn run_checks(checks: &[Check], opts: &VerifyOptions) -> Vec<CheckResult> {
    checks.par_iter().map(|c| c.run(opts)).collect()
}

pub fn results_csv(results: &[CheckResult]) -> String {
    let mut out = String::from("check,criterion,result,seconds,detail\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{:.3},\"{}\"\n",
            r.name,
            r.criterion,
            if r.passed { "pass" } else { "fail" },
            r.seconds,
            r.detail.replace('"', "\"\"")
        ));
    }
    out
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn module(spec: ModuleSpec) -> CircuitInstance {
    CircuitInstance::from_module(&spec).relax_domain()
}

fn simulate(
    c: &CircuitInstance,
    signals: &BTreeMap<String, InputSignal>,
    init: &InitOptions,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, String> {
    let setup = c.setup(signals, init).map_err(err)?;
    integrate(&setup.ode, &setup.state, cfg).map_err(err)
}

fn constant(inputs: &[(&str, f64)]) -> BTreeMap<String, InputSignal> {
    inputs.iter().map(|(k, v)| (k.to_string(), InputSignal::Constant(*v))).collect()
}

fn run(c: &CircuitInstance, inputs: &[(&str, f64)], cfg: &IntegratorConfig) -> Result<Trajectory, String> {
    simulate(c, &constant(inputs), &InitOptions::default(), cfg)
}

fn final_output(c: &CircuitInstance, traj: &Trajectory) -> f64 {
    traj.output_value(&c.output, traj.len() - 1)
}

fn rate(c: &CircuitInstance, traj: &Trajectory, limit: f64, cfg: &IntegratorConfig) -> Result<RateEstimate, String> {
    estimate_rate_with(traj, &c.output, limit, &FitOptions::for_config(cfg)).map_err(err)
}

/// `(a, fitted rate)` for every point of a one-input sweep.
fn sweep_rates(r: &SweepReport, input: &str) -> Result<Vec<(f64, f64)>, String> {
    r.points
        .iter()
        .map(|p| {
            let a = p.inputs[input];
            p.result.as_ref().map(|e| (a, e.fitted_rate)).map_err(|e| format!("{input}={a}: {e}"))
        })
        .collect()
}

fn show_rates(rates: &[(f64, f64)]) -> String {
    rates.iter().map(|(a, r)| format!("{a}:{r:.4}")).collect::<Vec<_>>().join(" ")
}

/// Rate fits for slowly settling composites use tight tolerances so the
/// decay stays above the integration floor for longer.
fn fine() -> IntegratorConfig {
    IntegratorConfig::oracle()
}

fn exp_closed_form(_: &VerifyOptions) -> Outcome {
    const REL: f64 = 1e-7;
    let c = module(mk_exp_nonneg());
    let cfg = IntegratorConfig::default().t_end(20.0).samples(21);
    let mut worst = 0.0f64;
    for a in [0.5, 2.0, 5.0] {
        let traj = run(&c, &[("a", a)], &cfg)?;
        for t in [1.0, 5.0, 10.0, 20.0] {
            let k = traj.times.iter().position(|&s| s == t).expect("integer sample times");
            let x = traj.value(k, &sp("X"));
            let exact = (a * (1.0 - (-t).exp())).exp();
            let rel = (x - exact).abs() / exact;
            ensure(rel <= REL, || format!("a={a} t={t}: x={x:e}, closed form {exact:e}, rel {rel:.2e}"))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("max rel error {worst:.2e} (tol {REL:e})"))
}

fn exp_rate(_: &VerifyOptions) -> Outcome {
    const LO: f64 = 0.95;
    const HI: f64 = 1.05;
    const THRESHOLD: f64 = 0.9;
    let c = module(mk_exp_nonneg());
    let report = sweep(&c, &grid_1d("a", &[0.1, 1.0, 10.0]), THRESHOLD, &IntegratorConfig::default(), &|p| p["a"].exp());
    let rates = sweep_rates(&report, "a")?;
    for &(a, r) in &rates {
        ensure((LO..=HI).contains(&r), || format!("a={a}: rate {r:.4} outside [{LO}, {HI}]"))?;
    }
    ensure(report.input_independent, || format!("verdict false at threshold {THRESHOLD}"))?;
    Ok(format!("rates {}; input_independent at {THRESHOLD}", show_rates(&rates)))
}

fn init_sensitivity(opts: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    const ORACLE_TOL: f64 = 1e-9;
    let c = module(mk_exp_nonneg());
    let (x0, z0, a) = (2.0f64, 0.0f64, 1.0f64);
    let init = InitOptions::default().with("X", x0).map_err(err)?.with("Z", z0).map_err(err)?.forced();
    let signals = constant(&[("a", a)]);
    // ln x - z is conserved, so x -> x(0) e^{a - z(0)}.
    let expected = (x0.ln() - z0).exp() * a.exp();
    let inverted = (z0 - x0.ln()).exp() * a.exp();
    let traj = simulate(&c, &signals, &init, &IntegratorConfig::default())?;
    let limit = estimate_limit(&traj, &c.output).map_err(err)?;
    ensure((limit - expected).abs() <= TOL, || format!("limit {limit:.9}, expected 2e = {expected:.9}"))?;
    let mut detail = format!(
        "limit {limit:.9} for x(0)=2, z(0)=0: x(0) e^(a-z(0)) = 2e, not e^(z(0)-ln x(0)) e^a = e/2 = {inverted:.9}"
    );
    if !opts.quick {
        let o = simulate(&c, &signals, &init, &fine())?;
        let v = final_output(&c, &o);
        ensure((v - expected).abs() <= ORACLE_TOL, || format!("oracle end value {v:.12} differs from 2e"))?;
        detail.push_str("; oracle agrees");
    }
    Ok(detail)
}

fn system1_logistic(_: &VerifyOptions) -> Outcome {
    const CLOSED_FORM: f64 = 1e-7;
    const BAND: f64 = 0.1;
    const THRESHOLD: f64 = 0.9;
    let c = module(mk_log_system1());
    let cfg = IntegratorConfig::default().samples(401);
    let mut worst = 0.0f64;
    for a in [0.5, 1.0, 2.0] {
        let traj = run(&c, &[("a", a)], &cfg)?;
        for k in 0..traj.len() {
            let t = traj.times[k];
            let z_exact = a / (1.0 + (a / E - 1.0) * (-a * t).exp());
            let (x, z) = (traj.value(k, &sp("X")), traj.value(k, &sp("Z")));
            let dev = (x - z_exact.ln()).abs().max((z - z_exact).abs() / z_exact);
            ensure(dev <= CLOSED_FORM, || format!("a={a} t={t}: deviation {dev:.2e} from the logistic solution"))?;
            worst = worst.max(dev);
        }
    }
    let mut rates = Vec::new();
    for a in [0.5f64, 1.0, 2.0] {
        let cfg = IntegratorConfig::default().t_end(40.0 / a.min(1.0)).samples(4000);
        let traj = run(&c, &[("a", a)], &cfg)?;
        let r = rate(&c, &traj, a.ln(), &cfg)?.fitted_rate;
        ensure((r - a).abs() <= BAND * a, || format!("a={a}: rate {r:.4} not within 10% of {a}"))?;
        rates.push((a, r));
    }
    let cfg = IntegratorConfig::default().t_end(160.0).samples(8000);
    let report = sweep(&c, &grid_1d("a", &[0.25, 1.0, 4.0]), THRESHOLD, &cfg, &|p| p["a"].ln());
    let swept = sweep_rates(&report, "a")?;
    ensure(!report.input_independent, || format!("sweep {} judged input independent", show_rates(&swept)))?;
    ensure((report.min_rate - 0.25).abs() <= BAND * 0.25, || format!("min rate {:.4}, expected about 0.25", report.min_rate))?;
    Ok(format!(
        "closed form within {worst:.2e}; rates {}; sweep {} not input independent",
        show_rates(&rates),
        show_rates(&swept)
    ))
}

fn system1r(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    const MIN_RATE: f64 = 0.9;
    const Z_FLOOR: f64 = 1.0 - 1e-9;
    let c = module(mk_log_system1r());
    let cfg = IntegratorConfig::default();
    let mut rates = Vec::new();
    for a in [1.0, E, 10.0] {
        let traj = run(&c, &[("a", a)], &cfg)?;
        let v = final_output(&c, &traj);
        ensure((v - a.ln()).abs() <= TOL, || format!("a={a}: x(40)={v:.9}, ln a = {:.9}", a.ln()))?;
        let zmin = traj.column(&sp("Z")).expect("Z").into_iter().fold(f64::INFINITY, f64::min);
        ensure(zmin >= Z_FLOOR, || format!("a={a}: z dips to {zmin}"))?;
        let r = rate(&c, &traj, a.ln(), &cfg)?.fitted_rate;
        ensure(r >= MIN_RATE, || format!("a={a}: rate {r:.4} below {MIN_RATE}"))?;
        rates.push((a, r));
    }
    Ok(format!("limits within {TOL:e}; z >= 1; rates {}", show_rates(&rates)))
}

fn system2(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    const MIN_RATE: f64 = 0.9;
    let c = module(mk_log_system2());
    let mut rates = Vec::new();
    for a in [0.1, 1.0, 10.0] {
        let traj = run(&c, &[("a", a)], &IntegratorConfig::default())?;
        let v = final_output(&c, &traj);
        ensure((v - a.ln()).abs() <= TOL, || format!("a={a}: x(40)={v:.9}, ln a = {:.9}", a.ln()))?;
        let traj = run(&c, &[("a", a)], &fine())?;
        let r = rate(&c, &traj, a.ln(), &fine())?.fitted_rate;
        ensure(r >= MIN_RATE, || format!("a={a}: rate {r:.4} below {MIN_RATE}"))?;
        rates.push((a, r));
    }
    Ok(format!("limits within {TOL:e}; rates {}", show_rates(&rates)))
}

fn system3(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    const LO: f64 = 0.9;
    const HI: f64 = 2.0;
    let c = module(mk_log_system3());
    let init = InitOptions::default().with("Z", 2.0).map_err(err)?;
    let a = 1.1f64;
    let bound = a * a.ln();
    let cfg = IntegratorConfig::default().t_end(400.0).samples(4000);
    let traj = simulate(&c, &constant(&[("a", a)]), &init, &cfg)?;
    let v = final_output(&c, &traj);
    ensure((v - a.ln()).abs() <= TOL, || format!("a=1.1: x={v:.9}, ln 1.1 = {:.9}", a.ln()))?;
    let r = rate(&c, &traj, a.ln(), &cfg)?.fitted_rate;
    ensure(r >= LO * bound && r <= HI * bound, || format!("a=1.1: rate {r:.4} outside [{LO}, {HI}] x {bound:.4}"))?;
    let cfg = IntegratorConfig::default().t_end(80.0);
    let low = simulate(&c, &constant(&[("a", 0.5)]), &init, &cfg)?;
    let v0 = final_output(&c, &low);
    ensure(v0.abs() <= TOL, || format!("a=0.5: x={v0:e}, expected the rectified value 0"))?;
    Ok(format!("a=1.1 -> {v:.9} at rate {r:.4} (a ln a = {bound:.4}); a=0.5 -> {v0:.1e}"))
}

fn system4_dual_rail(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    let c = module(mk_log_system4());
    let mut seen = Vec::new();
    for a in [0.25, 1.0, 2.0] {
        // At a = 1 both rails decay like 1/t.
        let cfg = if a == 1.0 {
            IntegratorConfig::default().t_end(1e7).max_step(1e6).samples(1001)
        } else {
            IntegratorConfig::default()
        };
        let traj = run(&c, &[("a", a)], &cfg)?;
        let last = traj.len() - 1;
        let (xp, xn) = (traj.value(last, &sp("X_p")), traj.value(last, &sp("X_n")));
        let (ep, en) = if a >= 1.0 { (a.ln(), 0.0) } else { (0.0, -a.ln()) };
        ensure((xp - ep).abs() <= TOL && (xn - en).abs() <= TOL, || {
            format!("a={a}: rails ({xp:.9}, {xn:.9}), expected ({ep:.9}, {en:.9})")
        })?;
        if a != 1.0 {
            let (big, small) = if a > 1.0 { (xp, xn) } else { (xn, xp) };
            ensure(big > TOL && small < TOL, || format!("a={a}: rails ({xp:e}, {xn:e}) not one-sided"))?;
        }
        seen.push(format!("{a}:({xp:.6}, {xn:.1e})"));
    }
    Ok(format!("rails {}", seen.join(" ")))
}

fn system5(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    const MIN_RATE: f64 = 0.9;
    let c = module(mk_log_system5(ConstEMode::Static));
    let mut rates = Vec::new();
    for a in [1.0, 2.0, 10.0, 100.0] {
        let traj = run(&c, &[("a", a)], &IntegratorConfig::default())?;
        let v = final_output(&c, &traj);
        ensure((v - a.ln()).abs() <= TOL, || format!("a={a}: output {v:.9}, ln a = {:.9}", a.ln()))?;
        let traj = run(&c, &[("a", a)], &fine())?;
        let r = rate(&c, &traj, a.ln(), &fine())?.fitted_rate;
        ensure(r >= MIN_RATE, || format!("a={a}: rate {r:.4} below {MIN_RATE}"))?;
        rates.push((a, r));
    }
    Ok(format!("limits within {TOL:e}; rates {}", show_rates(&rates)))
}

fn system6(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    const THRESHOLD: f64 = 0.9;
    let c = module(mk_log_system6(ConstEMode::Static));
    let grid = [0.1, 0.5, 2.0, 10.0, 100.0];
    for a in grid {
        let traj = run(&c, &[("a", a)], &IntegratorConfig::default())?;
        let v = final_output(&c, &traj);
        ensure((v - a.ln()).abs() <= TOL, || format!("a={a}: output {v:.9}, ln a = {:.9}", a.ln()))?;
    }
    let report = sweep(&c, &grid_1d("a", &grid), THRESHOLD, &fine(), &|p| p["a"].ln());
    let rates = sweep_rates(&report, "a")?;
    ensure(report.input_independent, || {
        format!("verdict false: rates {}, min {:.4}", show_rates(&rates), report.min_rate)
    })?;
    Ok(format!("limits within {TOL:e}; rates {}; input_independent at {THRESHOLD}", show_rates(&rates)))
}

fn composite(opts: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    const ORACLE_TOL: f64 = 1e-9;
    const MIN_RATE: f64 = 0.9;
    let decls = Decls::parse(&["a:real", "b:nonneg(0.1,100)"]).map_err(err)?;
    let c = compile_str("exp(a)*ln(b)", &decls, &CompileOptions::default()).map_err(err)?;
    ensure(matches!(c.input("a").map(|b| &b.rails), Some(Rails::Dual { .. })), || "input a is not dual-rail".into())?;
    let expected = (-1f64).exp() * 2f64.ln();
    let cases = [
        ("constant", BTreeMap::from([("a".to_string(), InputSignal::Constant(-1.0)), ("b".to_string(), InputSignal::Constant(2.0))])),
        (
            "time-varying",
            BTreeMap::from([
                ("a".to_string(), InputSignal::Relax { from: 0.0, to: -1.0, rate: 2.0 }),
                ("b".to_string(), InputSignal::Relax { from: 1.0, to: 2.0, rate: 2.0 }),
            ]),
        ),
    ];
    let mut parts = Vec::new();
    for (label, signals) in cases {
        let traj = simulate(&c, &signals, &InitOptions::default(), &IntegratorConfig::default())?;
        let v = final_output(&c, &traj);
        ensure((v - expected).abs() <= TOL, || format!("{label}: output {v:.9}, expected {expected:.9}"))?;
        let tight = simulate(&c, &signals, &InitOptions::default(), &fine())?;
        let r = rate(&c, &tight, expected, &fine())?.fitted_rate;
        ensure(r >= MIN_RATE, || format!("{label}: rate {r:.4} below {MIN_RATE}"))?;
        if !opts.quick {
            let o = final_output(&c, &tight);
            ensure((o - expected).abs() <= ORACLE_TOL, || format!("{label}: oracle end value {o:.12}"))?;
        }
        parts.push(format!("{label} -> {v:.9} at rate {r:.4}"));
    }
    Ok(format!("{} (e^-1 ln 2 = {expected:.9})", parts.join("; ")))
}

const SYSTEM3_REACTIONS: &str = "\
A + Z + X -> A + 2Z + X
X + 2Z -> X + Z
A + X -> A + 2X
X + Z -> Z
";

fn mass_action(_: &VerifyOptions) -> Outcome {
    let witness = |spec: &ModuleSpec| spec.ode.is_mass_action_realizable().witness;
    for (name, spec, species, term) in [
        ("System 1", mk_log_system1(), "X", "-Z"),
        ("System 2", mk_log_system2(), "X", "-Y*Z"),
    ] {
        let w = witness(&spec);
        let ok = matches!(&w, Some((s, m)) if s.as_str() == species && m.to_string() == term);
        ensure(ok, || format!("{name}: witness {w:?}, expected {term} in d{species}/dt"))?;
    }
    let mut realizable = vec![mk_log_system3(), mk_log_system4p(), mk_log_system4n()];
    realizable.extend(catalog_arithmetic());
    for spec in &realizable {
        ensure(witness(spec).is_none(), || format!("{} is not realizable: {:?}", spec.kind, witness(spec)))?;
    }
    let net = ReactionNetwork::from_ode(&mk_log_system3().ode).map_err(err)?;
    let published = parse_network(SYSTEM3_REACTIONS).map_err(err)?;
    let mut got: Vec<String> = net.reactions().iter().map(|r| r.to_string()).collect();
    let mut want: Vec<String> = published.reactions().iter().map(|r| r.to_string()).collect();
    got.sort();
    want.sort();
    ensure(got == want, || format!("System 3 reactions {got:?}, expected {want:?}"))?;
    ensure(net.derive_ode() == mk_log_system3().ode, || "System 3 network does not derive its ODE".into())?;
    Ok(format!(
        "Systems 1, 2 rejected with witnesses; {} modules realizable; System 3 -> {} reactions",
        realizable.len(),
        got.len()
    ))
}

fn catalog_arithmetic() -> Vec<ModuleSpec> {
    let mut v = vec![
        mk_identity(),
        mk_add(),
        mk_mul(),
        mk_reciprocal(),
        mk_divide(),
        mk_rectified_sub(),
        mk_abs_diff(),
        mk_max(),
    ];
    v.extend((1..=3).map(|m| mk_mth_root(m).expect("valid order")));
    v
}

fn conservation(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    let cases = [
        ("exp", mk_exp_nonneg(), 2.0),
        ("System 1", mk_log_system1(), 2.0),
        ("System 3", mk_log_system3(), 2.0),
        ("System 4p", mk_log_system4p(), 2.0),
        ("System 4n", mk_log_system4n(), 0.25),
    ];
    let mut parts = Vec::new();
    for (name, spec, a) in cases {
        let c = module(spec);
        let traj = run(&c, &[("a", a)], &IntegratorConfig::default())?;
        ensure(!c.conservation.is_empty(), || format!("{name} has no conservation law"))?;
        for law in &c.conservation {
            let drift = check_conservation(&traj, law);
            ensure(drift < TOL, || format!("{name}: {law} drifts by {drift:e}"))?;
            parts.push(format!("{name} {drift:.1e}"));
        }
    }
    Ok(format!("max drift per law: {}", parts.join(", ")))
}

fn counterexample(_: &VerifyOptions) -> Outcome {
    const BAND: f64 = 0.1;
    const THRESHOLD: f64 = 0.5;
    let c = module(mk_counterexample());
    let cfg = IntegratorConfig::default().t_end(250.0).samples(5000);
    let report = sweep(&c, &grid_1d("a", &[0.1, 1.0, 10.0]), THRESHOLD, &cfg, &|p| 1.0 / p["a"]);
    let rates = sweep_rates(&report, "a")?;
    for &(a, r) in &rates {
        ensure((r - a).abs() <= BAND * a, || format!("a={a}: rate {r:.4} not within 10% of {a}"))?;
    }
    ensure(!report.input_independent, || format!("judged input independent at {THRESHOLD}"))?;
    Ok(format!("rates {}; not input independent at {THRESHOLD}", show_rates(&rates)))
}

fn fitter_self_test(_: &VerifyOptions) -> Outcome {
    const TOL: f64 = 1e-6;
    let u = sp("U");
    let mut parts = Vec::new();
    for rho in [0.1, 1.0, E, 10.0] {
        let cfg = IntegratorConfig::default().t_end(40.0 / rho.min(1.0));
        let times = cfg.times();
        let traj = Trajectory {
            species: vec![u.clone()],
            states: times.iter().map(|t| vec![3.0 + 0.5 * (-rho * t).exp()]).collect(),
            times,
            step_errors: vec![],
            stats: StepStats::default(),
        };
        let r = estimate_rate_with(&traj, &Rails::Single(u.clone()), 3.0, &FitOptions::for_config(&cfg)).map_err(err)?;
        let dev = (r.fitted_rate - rho).abs();
        ensure(dev <= TOL, || format!("rho={rho}: fitted {}", r.fitted_rate))?;
        parts.push(format!("{rho:.4}:{dev:.1e}"));
    }
    Ok(format!("recovery error {}", parts.join(" ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors() {
        assert_eq!(select("all").unwrap().len(), 15);
        assert_eq!(select("system6").unwrap()[0].criterion, 10);
        assert_eq!(select("3").unwrap()[0].name, "init-sensitivity");
        assert!(select("nope").is_err());
        let mut n: Vec<u32> = catalog().iter().map(|c| c.criterion).collect();
        n.dedup();
        assert_eq!(n, (1..=15).collect::<Vec<_>>());
    }

    #[test]
    fn csv_quotes_details() {
        let r = CheckResult { name: "x", criterion: 1, passed: false, detail: "say \"hi\"".into(), seconds: 0.5 };
        assert_eq!(results_csv(&[r]), "check,criterion,result,seconds,detail\nx,1,fail,0.500,\"say \"\"hi\"\"\"\n");
    }
}
