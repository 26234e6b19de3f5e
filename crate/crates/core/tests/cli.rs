use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crncalc::crn::{parse_network, parse_ode};
use crncalc::library::{mk_log_system6, ConstEMode};

fn crncalc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crncalc"))
        .args(args)
        .current_dir(dir)
        .env_remove("CRNCALC_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value_after(text: &str, label: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("no `{label}` in {text}"));
    line[label.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn compile_composite_writes_network_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["compile", "exp(a)*ln(b)", "--in", "a:real", "--in", "b:nonneg(0.1,100)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for kind in ["exp_real", "log6", "mul"] {
        assert!(out.contains(kind), "{out}");
    }
    assert!(out.contains("flags: chemistry=true mass_action=true"));
    assert!(out.contains("rate: min{ρ_in"));
    let net = fs::read_to_string(dir.path().join("circuit.crn")).unwrap();
    assert!(parse_network(&net).unwrap().reactions().len() > 10);
    let meta = fs::read_to_string(dir.path().join("circuit.crn.meta")).unwrap();
    assert!(meta.contains("roster.log6 = log6"));
    assert!(meta.contains("input.a = "));
}

#[test]
fn compile_bare_variable_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["compile", "a", "-o", "id.crn"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("identity"));
    assert!(dir.path().join("id.crn.meta").exists());
}

#[test]
fn domain_and_syntax_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["compile", "ln(a)", "--log-system", "3", "--in", "a:nonneg(0.5,2)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain"), "{}", stderr(&o));

    let o = crncalc(dir.path(), &["compile", "exp(a*)"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("syntax error at byte 6"), "{err}");
    assert!(err.contains("  exp(a*)\n        ^"), "{err}");

    let o = crncalc(dir.path(), &["compile", "ln(a)", "--in", "a:complex"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("circuit.crn").exists());
}

#[test]
fn simulate_system6_reaches_ln2() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["simulate", "--module", "log6", "--value", "a=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value_after(&out, "final output:") - 2f64.ln()).abs() < 1e-6);
    assert!((value_after(&out, "estimated limit:") - 2f64.ln()).abs() < 1e-6);
    assert!(out.contains("conservation drift"));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,"));
    assert_eq!(csv.lines().count(), 2001);
}

#[test]
fn simulate_reports_rate_against_expression() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["simulate", "ln(a)", "--log-system", "6", "--value", "a=2", "--gnuplot", "err.dat"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value_after(&out, "expected value:") - 2f64.ln()).abs() < 1e-12);
    assert!(value_after(&out, "fitted rate:") > 0.9);
    let plot = fs::read_to_string(dir.path().join("err.dat")).unwrap();
    assert!(plot.contains("# t log10_abs_error"));
}

#[test]
fn constant_network_gives_flat_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.ode"), "C' = 0\n").unwrap();
    let o = crncalc(dir.path(), &["simulate", "--network", "c.ode", "--output", "C", "--init", "C=3", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let values: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values.len(), 5);
    assert!(values.iter().all(|v| v.parse::<f64>().unwrap() == 3.0));
}

#[test]
fn overflow_exits_3_with_advice() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["simulate", "exp(a)", "--value", "a=1000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("reduce the input values"));
}

#[test]
fn unsettled_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["simulate", "--module", "log6", "--value", "a=2", "--t-end", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not converged"));
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn init_overrides_are_checked_unless_perturbed() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["simulate", "--module", "exp_nonneg", "--value", "a=1", "--init", "Z=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("initialization violates"));

    let o = crncalc(
        dir.path(),
        &["simulate", "--module", "exp_nonneg", "--value", "a=1", "--perturb-init", "X=2", "--perturb-init", "Z=0"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!((value_after(&stdout(&o), "final output:") - 2.0 * std::f64::consts::E).abs() < 1e-6);

    let o = crncalc(dir.path(), &["simulate", "--module", "exp_nonneg", "--value", "a=1", "--perturb-init", "x=2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "exp(a)*ln(b)", "--in", "a:real", "--in", "b:pos", "--value", "a=-1:0@2", "--value", "b=2"];
    let first = crncalc(dir.path(), &[&args[..], &["-o", "one.csv"]].concat());
    let second = crncalc(dir.path(), &[&args[..], &["-o", "two.csv"]].concat());
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout.len(), second.stdout.len());
    let one = fs::read(dir.path().join("one.csv")).unwrap();
    let two = fs::read(dir.path().join("two.csv")).unwrap();
    assert_eq!(one, two);
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["export", "--module", "log3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert_eq!(parse_network(&text).unwrap().reactions().len(), 4);

    let o = crncalc(dir.path(), &["export", "--module", "log3", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown format"));

    fs::write(dir.path().join("empty.crn"), "").unwrap();
    let o = crncalc(dir.path(), &["export", "--network", "empty.crn", "-o", "out.crn"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("out.crn")).unwrap(), "# crncalc network: empty\n");

    let o = crncalc(dir.path(), &["export", "--module", "log6", "-o", "l6.crn"]);
    assert_eq!(o.status.code(), Some(0));
    let net = parse_network(&fs::read_to_string(dir.path().join("l6.crn")).unwrap()).unwrap();
    assert!(net.derive_ode().same_system(&mk_log_system6(ConstEMode::Static).ode));

    let o = crncalc(dir.path(), &["export", "--network", "l6.crn", "--format", "ode"]);
    let ode = parse_ode(&stdout(&o)).unwrap();
    assert!(ode.same_system(&net.derive_ode()));
}

#[test]
fn non_realizable_circuit_exports_only_as_ode() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["export", "--module", "log1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = crncalc(dir.path(), &["export", "--module", "log1", "--format", "ode"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("X' = "));
    let o = crncalc(dir.path(), &["compile", "ln(a)", "--log-system", "1", "--in", "a:pos"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("writing the ODE instead"));
    assert!(parse_ode(&fs::read_to_string(dir.path().join("circuit.crn")).unwrap()).is_ok());
}

#[test]
fn verify_selected_check_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["verify", "exp-closed-form", "--csv", "v.csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("[PASS]  1 exp-closed-form"));
    let csv = fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert!(csv.starts_with("check,criterion,result,seconds,detail\nexp-closed-form,1,pass,"));

    let o = crncalc(dir.path(), &["verify", "init-sensitivity"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2e"));

    let o = crncalc(dir.path(), &["verify", "no-such-check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_all_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["verify", "all", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("15/15 checks passed"));
}

#[test]
fn sweep_reports_verdict_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = crncalc(dir.path(), &["sweep", "exp(a)", "--grid", "a=0.1,1,10", "--csv", "s.csv", "--gnuplot", "s.dat"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().last().unwrap().ends_with("input_independent=true"));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("grid_point,fitted_rate,r_squared,verdict"));
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(fs::read_to_string(dir.path().join("s.dat")).unwrap().matches("# a=").count(), 3);

    let o = crncalc(dir.path(), &["sweep", "--module", "counterexample", "--grid", "a=0.1,1", "--t-end", "250", "--samples", "5000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().last().unwrap().ends_with("input_independent=false"));

    let o = crncalc(dir.path(), &["sweep", "exp(a)"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "# experiment\nexpr = ln(a)\nlog_system = 6\nvalue = a=2\nt-end = 60\n").unwrap();
    let o = crncalc(dir.path(), &["simulate", "--config", "run.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((value_after(&stdout(&o), "final output:") - 2f64.ln()).abs() < 1e-6);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.lines().last().unwrap().starts_with("6.0000000000000000e1,"));

    let o = crncalc(dir.path(), &["simulate", "--config", "run.cfg", "--value", "a=3", "--t-end", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((value_after(&stdout(&o), "final output:") - 3f64.ln()).abs() < 1e-6);

    fs::write(dir.path().join("bad.cfg"), "t_end = 10\nbogus = 1\n").unwrap();
    let o = crncalc(dir.path(), &["simulate", "--config", "bad.cfg", "ln(a)", "--value", "a=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key `bogus`"));
}

#[test]
fn tolerance_precedence_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "rel-tol = 1e-6\n").unwrap();
    let base = ["simulate", "--config", "run.cfg", "--module", "exp_nonneg", "--value", "a=1"];
    let run = |extra: &[&str], env: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_crncalc"));
        cmd.args(base).args(extra).args(["-o", out]).current_dir(dir.path()).env_remove("CRNCALC_TOL");
        if let Some(v) = env {
            cmd.env("CRNCALC_TOL", v);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read(dir.path().join(out)).unwrap()
    };
    let file_only = run(&[], None, "a.csv");
    let env = run(&[], Some("1e-11"), "b.csv");
    let flag_over_env = run(&["--rel-tol", "1e-6"], Some("1e-11"), "c.csv");
    let env_plain = run(&["--rel-tol", "1e-11"], None, "d.csv");
    assert_ne!(file_only, env);
    assert_eq!(file_only, flag_over_env);
    assert_eq!(env, env_plain);
}
