use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use super::config::{fill, fill_flag, fill_list, RunFile};
use super::{CircuitArgs, Cli, CliError, Command, RunArgs};
use crate::analysis::{
    check_conservation, estimate_limit, estimate_rate_with, expression_truth, gnuplot_data, sweep, sweep_csv,
    sweep_text, FitOptions,
};
use crate::compiler::{compile_str, CircuitInstance, CompileOptions, Decl, Decls, InitOptions, InputSignal, Interval, SignTag};
use crate::crn::{parse_network, parse_ode, write_network, write_ode, PolynomialOde, ReactionNetwork, SpeciesId};
use crate::library::{catalog, mk_const_e, mk_log_system5, mk_log_system6, mk_mth_root, ConstEMode, ModuleSpec, Rails};
use crate::sim::{integrate, oracle, write_csv, IntegratorConfig, Trajectory, TOL_ENV};
use crate::verify::{results_csv, run_checks, select, VerifyOptions};

pub(super) fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    match cli.command {
        Command::Compile { mut circuit, mut out, mut meta } => {
            merge_circuit(&mut circuit, &file)?;
            fill(&mut out, &file, "out")?;
            fill(&mut meta, &file, "meta")?;
            compile_cmd(&circuit, out, meta)
        }
        Command::Simulate { mut circuit, mut run, mut init, mut perturb_init, mut out, mut gnuplot } => {
            merge_circuit(&mut circuit, &file)?;
            merge_run(&mut run, &file)?;
            fill_list(&mut init, &file, "init");
            fill_list(&mut perturb_init, &file, "perturb-init");
            fill(&mut out, &file, "out")?;
            fill(&mut gnuplot, &file, "gnuplot")?;
            let cfg = integrator_config(&run, &file)?;
            simulate_cmd(&circuit, &run, &cfg, &init, &perturb_init, out, gnuplot)
        }
        Command::Sweep { mut circuit, mut run, mut grid, mut threshold, mut csv, mut gnuplot } => {
            merge_circuit(&mut circuit, &file)?;
            merge_run(&mut run, &file)?;
            fill_list(&mut grid, &file, "grid");
            fill(&mut threshold, &file, "threshold")?;
            fill(&mut csv, &file, "csv")?;
            fill(&mut gnuplot, &file, "gnuplot")?;
            let cfg = integrator_config(&run, &file)?;
            sweep_cmd(&circuit, &run, &cfg, &grid, threshold.unwrap_or(0.9), csv, gnuplot)
        }
        Command::Verify { mut selector, mut quick, mut csv } => {
            fill(&mut selector, &file, "selector")?;
            fill_flag(&mut quick, &file, "quick")?;
            fill(&mut csv, &file, "csv")?;
            verify_cmd(selector.as_deref().unwrap_or("all"), quick, csv)
        }
        Command::Export { mut circuit, mut format, mut out } => {
            merge_circuit(&mut circuit, &file)?;
            fill(&mut format, &file, "format")?;
            fill(&mut out, &file, "out")?;
            export_cmd(&circuit, format.as_deref().unwrap_or("crn"), out)
        }
    }
}

fn merge_circuit(c: &mut CircuitArgs, file: &RunFile) -> Result<(), CliError> {
    if c.expr.is_none() && c.module.is_none() && c.network.is_none() {
        fill(&mut c.expr, file, "expr")?;
        fill(&mut c.module, file, "module")?;
        fill(&mut c.network, file, "network")?;
    }
    fill(&mut c.output, file, "output")?;
    fill_list(&mut c.decls, file, "in");
    fill(&mut c.log_system, file, "log-system")?;
    fill(&mut c.const_e, file, "const-e")?;
    fill_flag(&mut c.relax_domain, file, "relax-domain")
}

fn merge_run(r: &mut RunArgs, file: &RunFile) -> Result<(), CliError> {
    fill_list(&mut r.values, file, "value");
    fill(&mut r.t_end, file, "t-end")?;
    fill(&mut r.abs_tol, file, "abs-tol")?;
    fill(&mut r.max_step, file, "max-step")?;
    fill(&mut r.samples, file, "samples")?;
    fill_flag(&mut r.oracle, file, "oracle")
}

/// `rel_tol` precedence: flag, then the environment, then the config file.
fn integrator_config(r: &RunArgs, file: &RunFile) -> Result<IntegratorConfig, CliError> {
    let mut cfg = if r.oracle { IntegratorConfig::oracle() } else { IntegratorConfig::default() };
    if let Some(v) = file.parsed::<f64>("rel-tol")? {
        cfg.rel_tol = v;
    }
    if let Ok(v) = std::env::var(TOL_ENV) {
        cfg.rel_tol = v.trim().parse().map_err(|_| CliError::usage(format!("{TOL_ENV}={v} is not a number")))?;
    }
    if let Some(v) = r.rel_tol {
        cfg.rel_tol = v;
    }
    if let Some(v) = r.abs_tol {
        cfg.abs_tol = v;
    }
    if let Some(v) = r.t_end {
        cfg.t_end = v;
    }
    if let Some(v) = r.max_step {
        cfg.max_step = v;
    }
    if let Some(v) = r.samples {
        cfg.sample_count = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn const_e_mode(c: &CircuitArgs) -> Result<ConstEMode, CliError> {
    match c.const_e.as_deref() {
        None | Some("static") => Ok(ConstEMode::Static),
        Some("synthesized") => Ok(ConstEMode::Synthesized),
        Some(other) => Err(CliError::usage(format!("--const-e must be `static` or `synthesized`, got `{other}`"))),
    }
}

fn lookup_module(name: &str, mode: ConstEMode) -> Result<ModuleSpec, CliError> {
    if let Some(m) = name.strip_prefix("root").and_then(|m| m.parse::<u32>().ok()) {
        return mk_mth_root(m).map_err(|e| CliError::usage(e.to_string()));
    }
    match name {
        "log5" => Ok(mk_log_system5(mode)),
        "log6" => Ok(mk_log_system6(mode)),
        "const_e" => Ok(mk_const_e(mode)),
        _ => {
            let all = catalog();
            let names: Vec<String> = all.iter().map(|s| s.kind.name()).collect();
            all.into_iter()
                .find(|s| s.kind.name() == name)
                .ok_or_else(|| CliError::usage(format!("unknown module `{name}`; known: {}, rootN", names.join(", "))))
        }
    }
}

/// ODE text if any line is an equation, a reaction list otherwise.
fn read_system(path: &Path) -> Result<(PolynomialOde, Option<ReactionNetwork>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&format!("cannot read {}", path.display()), e))?;
    let is_ode = text.lines().any(|l| {
        let l = l.split('#').next().unwrap_or("");
        l.contains('=') && !l.contains("->") && !l.contains(';')
    });
    let parsed = if !is_ode {
        parse_network(&text).map(|net| (net.derive_ode(), Some(net)))
    } else {
        parse_ode(&text).map(|ode| (ode, None))
    };
    parsed.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn title_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "network".into())
}

/// Builds the circuit; `fallback` supplies declarations for an expression
/// when none were given.
fn load_circuit(c: &CircuitArgs, fallback: Option<Decls>) -> Result<CircuitInstance, CliError> {
    let sources = [c.expr.is_some(), c.module.is_some(), c.network.is_some()].iter().filter(|&&b| b).count();
    if sources != 1 {
        return Err(CliError::usage("give exactly one of an expression, --module or --network"));
    }
    let mode = const_e_mode(c)?;
    let circuit = if let Some(name) = &c.module {
        CircuitInstance::from_module(&lookup_module(name, mode)?)
    } else if let Some(path) = &c.network {
        let output = c.output.as_deref().ok_or_else(|| CliError::usage("--network needs --output SPECIES"))?;
        let output = SpeciesId::new(output)?;
        let (ode, _) = read_system(path)?;
        CircuitInstance::from_ode(&title_of(path), ode, output)?
    } else {
        let text = c.expr.as_deref().unwrap_or_default();
        let decls = if c.decls.is_empty() {
            fallback.unwrap_or_default()
        } else {
            Decls::parse(&c.decls)?
        };
        let opts = CompileOptions { log_system: c.log_system, const_e: mode };
        compile_str(text, &decls, &opts).map_err(|e| CliError::compile(e, Some(text)))?
    };
    Ok(if c.relax_domain { circuit.relax_domain() } else { circuit })
}

fn number(text: &str, what: &str) -> Result<f64, CliError> {
    text.trim().parse::<f64>().map_err(|_| CliError::usage(format!("bad number `{text}` in {what}")))
}

/// `name=v` or `name=from:to@rate`.
fn parse_signal(item: &str) -> Result<(String, InputSignal), CliError> {
    let (name, rest) =
        item.split_once('=').ok_or_else(|| CliError::usage(format!("expected `name=value`, got `{item}`")))?;
    let sig = match rest.split_once('@') {
        Some((span, rate)) => {
            let (from, to) = span
                .split_once(':')
                .ok_or_else(|| CliError::usage(format!("expected `name=from:to@rate`, got `{item}`")))?;
            InputSignal::Relax { from: number(from, item)?, to: number(to, item)?, rate: number(rate, item)? }
        }
        None => InputSignal::Constant(number(rest, item)?),
    };
    Ok((name.trim().to_string(), sig))
}

fn parse_signals(items: &[String]) -> Result<BTreeMap<String, InputSignal>, CliError> {
    items.iter().map(|i| parse_signal(i)).collect()
}

/// Declarations covering exactly the given values of each input.
fn range_decls(ranges: &BTreeMap<String, (f64, f64)>) -> Decls {
    let mut d = Decls::default();
    for (name, &(lo, hi)) in ranges {
        let sign = if lo < 0.0 { SignTag::Real } else { SignTag::NonNeg };
        d.insert(name, Decl { sign, range: Interval::new(lo, hi) });
    }
    d
}

fn signal_decls(signals: &BTreeMap<String, InputSignal>) -> Decls {
    range_decls(
        &signals
            .iter()
            .map(|(k, s)| (k.clone(), (s.initial().min(s.limit()), s.limit())))
            .map(|(k, (lo, limit))| (k, (lo.min(limit), limit)))
            .collect(),
    )
}

fn parse_init(items: &[String], opts: InitOptions) -> Result<InitOptions, CliError> {
    items.iter().try_fold(opts, |o, item| {
        let (s, v) =
            item.split_once('=').ok_or_else(|| CliError::usage(format!("expected `species=value`, got `{item}`")))?;
        Ok(o.with(s.trim(), number(v, item)?)?)
    })
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let what = format!("cannot write {}", path.display());
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(&what, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| CliError::io(&what, e))?;
    tmp.persist(path).map_err(|e| CliError::io(&what, e.error))?;
    Ok(())
}

fn compile_cmd(c: &CircuitArgs, out: Option<PathBuf>, meta: Option<PathBuf>) -> Result<(), CliError> {
    let circuit = load_circuit(c, None)?;
    let out = out.unwrap_or_else(|| PathBuf::from("circuit.crn"));
    let meta = meta.unwrap_or_else(|| {
        let mut m = out.clone().into_os_string();
        m.push(".meta");
        PathBuf::from(m)
    });
    let text = match circuit.network() {
        Ok(net) => write_network(&net, &circuit.title),
        Err(e) => {
            eprintln!("note: {e}; writing the ODE instead");
            write_ode(&circuit.ode, &circuit.title)
        }
    };
    write_atomic(&out, &text)?;
    write_atomic(&meta, &circuit.metadata())?;

    println!("circuit: {}", circuit.title);
    println!("species: {}", circuit.ode.len());
    println!("roster:");
    for r in &circuit.roster {
        println!("  {:<14} {:<14} rate >= {}", r.record.path, r.record.kind, r.record.rate.checked());
    }
    println!("flags: {}", circuit.flags());
    println!("rate: {}", circuit.rate_formula());
    println!("rate with constant inputs: {}", circuit.predicted_rate(f64::INFINITY));
    println!("wrote {} and {}", out.display(), meta.display());
    Ok(())
}

fn simulate_cmd(
    c: &CircuitArgs,
    run: &RunArgs,
    cfg: &IntegratorConfig,
    init: &[String],
    perturb: &[String],
    out: Option<PathBuf>,
    gnuplot: Option<PathBuf>,
) -> Result<(), CliError> {
    let signals = parse_signals(&run.values)?;
    let circuit = load_circuit(c, Some(signal_decls(&signals)))?;
    let mut opts = parse_init(init, InitOptions::default())?;
    opts = parse_init(perturb, opts)?;
    if let Some(s) = opts.overrides.keys().find(|s| !circuit.ode.contains(s)) {
        return Err(CliError::usage(format!("`{s}` is not a species of {}", circuit.title)));
    }
    if !perturb.is_empty() {
        opts = opts.forced();
    }
    let setup = circuit.setup(&signals, &opts)?;
    let traj = integrate(&setup.ode, &setup.state, cfg)?;
    let out = out.unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    write_atomic(&out, &write_csv(&traj))?;

    let final_value = traj.output_value(&circuit.output, traj.len() - 1);
    println!("final output: {final_value:.12e}");
    let limits: BTreeMap<String, f64> = signals.iter().map(|(k, s)| (k.clone(), s.limit())).collect();
    let expected = circuit.expr.as_ref().and_then(|e| e.eval(&|n| limits.get(n).copied()));
    match expected {
        Some(v) => println!("expected value: {v:.12e}"),
        None => println!("expected value: unknown"),
    }
    for law in &circuit.conservation {
        println!("conservation drift ({law}): {:.3e}", check_conservation(&traj, law));
    }
    let input_rate = signals.values().map(InputSignal::rate).fold(f64::INFINITY, f64::min);
    if !circuit.roster.is_empty() {
        println!("predicted rate: {}", circuit.predicted_rate(input_rate));
    }
    if let Some(v) = expected {
        match estimate_rate_with(&traj, &circuit.output, v, &FitOptions::for_config(cfg)) {
            Ok(r) => println!(
                "fitted rate: {:.6} (r2 {:.6}, window [{:.3}, {:.3}])",
                r.fitted_rate, r.r_squared, r.fit_window.0, r.fit_window.1
            ),
            Err(e) => println!("fitted rate: unavailable ({e})"),
        }
    }
    let limit = estimate_limit(&traj, &circuit.output);
    if let Some(path) = gnuplot {
        let target = expected.or(limit.as_ref().ok().copied()).unwrap_or(final_value);
        write_atomic(&path, &gnuplot_data(&[(circuit.title.clone(), &traj, &circuit.output, target)]))?;
    }
    let limit = limit.map_err(|e| CliError::new(3, format!("{e}; try a larger --t-end")))?;
    println!("estimated limit: {limit:.12e}");
    println!("wrote {}", out.display());
    Ok(())
}

/// `name=v1,v2,..` items as a cartesian product.
fn parse_grid(items: &[String], fixed: &BTreeMap<String, InputSignal>) -> Result<Vec<BTreeMap<String, f64>>, CliError> {
    let mut grid = vec![fixed.iter().map(|(k, s)| (k.clone(), s.limit())).collect::<BTreeMap<_, _>>()];
    for item in items {
        let (name, list) =
            item.split_once('=').ok_or_else(|| CliError::usage(format!("expected `name=v1,v2,..`, got `{item}`")))?;
        let values = list.split(',').map(|v| number(v, item)).collect::<Result<Vec<f64>, _>>()?;
        grid = grid
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(name.trim().to_string(), *v);
                    q
                })
            })
            .collect();
    }
    if items.is_empty() {
        return Err(CliError::usage("sweep needs at least one --grid"));
    }
    Ok(grid)
}

fn sweep_cmd(
    c: &CircuitArgs,
    run: &RunArgs,
    cfg: &IntegratorConfig,
    grid: &[String],
    threshold: f64,
    csv: Option<PathBuf>,
    gnuplot: Option<PathBuf>,
) -> Result<(), CliError> {
    let fixed = parse_signals(&run.values)?;
    let grid = parse_grid(grid, &fixed)?;
    let mut ranges: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for p in &grid {
        for (k, &v) in p {
            let r = ranges.entry(k.clone()).or_insert((v, v));
            *r = (r.0.min(v), r.1.max(v));
        }
    }
    let circuit = load_circuit(c, Some(range_decls(&ranges)))?;
    let constant_setup = |inputs: &BTreeMap<String, f64>| {
        let signals = inputs.iter().map(|(k, v)| (k.clone(), InputSignal::Constant(*v))).collect();
        circuit.setup(&signals, &InitOptions::default())
    };
    let report = if circuit.expr.is_some() {
        sweep(&circuit, &grid, threshold, cfg, &expression_truth(&circuit))
    } else {
        // Modules and bare networks: the limit of a long high-accuracy run.
        let truth = |inputs: &BTreeMap<String, f64>| {
            constant_setup(inputs)
                .ok()
                .and_then(|s| oracle(&s.ode, &s.state, 4.0 * cfg.t_end).ok())
                .and_then(|t| estimate_limit(&t, &circuit.output).ok())
                .unwrap_or(f64::NAN)
        };
        sweep(&circuit, &grid, threshold, cfg, &truth)
    };
    print!("{}", sweep_text(&report));
    if let Some(path) = csv {
        write_atomic(&path, &sweep_csv(&report))?;
    }
    if let Some(path) = gnuplot {
        let runs: Vec<(String, Trajectory, f64)> = report
            .points
            .iter()
            .filter_map(|p| {
                let s = constant_setup(&p.inputs).ok()?;
                let t = integrate(&s.ode, &s.state, cfg).ok()?;
                let label = p.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
                Some((label, t, p.limit))
            })
            .collect();
        let refs: Vec<(String, &Trajectory, &Rails, f64)> =
            runs.iter().map(|(l, t, lim)| (l.clone(), t, &circuit.output, *lim)).collect();
        write_atomic(&path, &gnuplot_data(&refs))?;
    }
    Ok(())
}

fn verify_cmd(selector: &str, quick: bool, csv: Option<PathBuf>) -> Result<(), CliError> {
    let checks = select(selector).map_err(CliError::usage)?;
    let results = run_checks(&checks, &VerifyOptions { quick });
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} checks passed", results.len());
    if let Some(path) = csv {
        write_atomic(&path, &results_csv(&results))?;
    }
    match results.iter().find(|r| !r.passed) {
        Some(r) => Err(CliError::new(1, format!("check {} ({}) failed: {}", r.name, r.criterion, r.detail))),
        None => Ok(()),
    }
}

fn export_cmd(c: &CircuitArgs, format: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    if format != "crn" && format != "ode" {
        return Err(CliError::usage(format!("unknown format `{format}`; expected crn or ode")));
    }
    let text = match (&c.network, &c.output) {
        // A network file without a designated output is exported as is.
        (Some(path), None) if c.expr.is_none() && c.module.is_none() => {
            let (ode, net) = read_system(path)?;
            let title = title_of(path);
            match (format, net) {
                ("crn", Some(net)) => write_network(&net, &title),
                ("crn", None) => write_network(&ReactionNetwork::from_ode(&ode)?, &title),
                _ => write_ode(&ode, &title),
            }
        }
        _ => {
            let circuit = load_circuit(c, None)?;
            if format == "crn" {
                let net = circuit
                    .network()
                    .map_err(|e| CliError::usage(format!("{e}; use --format ode for this circuit")))?;
                write_network(&net, &circuit.title)
            } else {
                write_ode(&circuit.ode, &circuit.title)
            }
        }
    };
    match out {
        Some(path) => write_atomic(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signals_and_grids() {
        let (n, s) = parse_signal("a=-1:2@0.5").unwrap();
        assert_eq!(n, "a");
        assert_eq!(s, InputSignal::Relax { from: -1.0, to: 2.0, rate: 0.5 });
        assert_eq!(parse_signal("b=1e-3").unwrap().1, InputSignal::Constant(1e-3));
        assert!(parse_signal("b").is_err());
        assert!(parse_signal("b=x").is_err());

        let fixed = BTreeMap::from([("c".to_string(), InputSignal::Constant(3.0))]);
        let g = parse_grid(&["a=1,2".into(), "b=5,6,7".into()], &fixed).unwrap();
        assert_eq!(g.len(), 6);
        assert!(g.iter().all(|p| p["c"] == 3.0));
        assert!(parse_grid(&[], &fixed).is_err());
    }

    #[test]
    fn decls_follow_values() {
        let signals = parse_signals(&["a=-1:2@1".into(), "b=3".into()]).unwrap();
        let d = signal_decls(&signals);
        assert_eq!(d.get("a").sign, SignTag::Real);
        assert_eq!(d.get("a").range, Interval::new(-1.0, 2.0));
        assert_eq!(d.get("b").sign, SignTag::NonNeg);
        assert_eq!(d.get("b").range, Interval::point(3.0));
    }

    #[test]
    fn module_names_resolve() {
        for name in ["log6", "log3", "exp_real", "root3", "divide", "counterexample", "const_e"] {
            assert!(lookup_module(name, ConstEMode::Static).is_ok(), "{name}");
        }
        assert_eq!(lookup_module("nope", ConstEMode::Static).unwrap_err().code, 2);
        assert!(lookup_module("root0", ConstEMode::Static).is_err());
    }
}
