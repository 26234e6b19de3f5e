use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::init::resolve;
use super::signs::{infer_signs, Decl, Decls, Interval, SignTag, Signed};
use super::{parse, CompileError, Expr, InitOptions};
use crate::crn::{CrnError, Monomial, PolynomialOde, ReactionNetwork, SpeciesId};
use crate::library::{
    mk_abs_diff, mk_add, mk_exp_nonneg, mk_exp_real, mk_identity, mk_log_system1, mk_log_system1r, mk_log_system2,
    mk_log_system3, mk_log_system4, mk_log_system5, mk_log_system6, mk_max, mk_mth_root, mk_mul, mk_reciprocal,
    Assembly, Bound, ComponentRecord, ConservationLaw, ConstEMode, Flags, InitRule, ModuleError,
    ModuleSpec, Rails,
};

/// Which logarithm construction `ln` compiles to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogSystem {
    S1,
    S1r,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl LogSystem {
    pub const ALL: [LogSystem; 7] =
        [LogSystem::S1, LogSystem::S1r, LogSystem::S2, LogSystem::S3, LogSystem::S4, LogSystem::S5, LogSystem::S6];

    pub fn module(self, mode: ConstEMode) -> ModuleSpec {
        match self {
            LogSystem::S1 => mk_log_system1(),
            LogSystem::S1r => mk_log_system1r(),
            LogSystem::S2 => mk_log_system2(),
            LogSystem::S3 => mk_log_system3(),
            LogSystem::S4 => mk_log_system4(),
            LogSystem::S5 => mk_log_system5(mode),
            LogSystem::S6 => mk_log_system6(mode),
        }
    }
}

impl FromStr for LogSystem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "1" => LogSystem::S1,
            "1r" => LogSystem::S1r,
            "2" => LogSystem::S2,
            "3" => LogSystem::S3,
            "4" => LogSystem::S4,
            "5" => LogSystem::S5,
            "6" => LogSystem::S6,
            _ => return Err(format!("unknown log system `{s}` (expected 1, 1r, 2, 3, 4, 5 or 6)")),
        })
    }
}

impl fmt::Display for LogSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogSystem::S1 => "1",
            LogSystem::S1r => "1r",
            LogSystem::S2 => "2",
            LogSystem::S3 => "3",
            LogSystem::S4 => "4",
            LogSystem::S5 => "5",
            LogSystem::S6 => "6",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompileOptions {
    /// `None` picks System 5 when the argument is provably at least 1 and
    /// System 6 otherwise.
    pub log_system: Option<LogSystem>,
    pub const_e: ConstEMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputBinding {
    pub name: String,
    pub rails: Rails,
    pub decl: Decl,
}

/// Top-level module instance together with the ranges of its input limits.
#[derive(Clone, Debug, PartialEq)]
pub struct RosterEntry {
    pub record: ComponentRecord,
    pub port_ranges: BTreeMap<String, Interval>,
}

impl RosterEntry {
    /// Worst-case checked rate over the recorded input ranges.
    pub fn rate(&self, input_rate: f64) -> f64 {
        self.record.rate.worst_case(input_rate, &|p| {
            self.port_ranges.get(p).map(|r| (r.lo, r.hi)).unwrap_or((0.0, f64::INFINITY))
        })
    }
}

/// Input value over time: constant, or `to + (from - to) e^{-rate t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InputSignal {
    Constant(f64),
    Relax { from: f64, to: f64, rate: f64 },
}

impl InputSignal {
    pub fn limit(&self) -> f64 {
        match *self {
            InputSignal::Constant(v) => v,
            InputSignal::Relax { to, .. } => to,
        }
    }

    pub fn initial(&self) -> f64 {
        match *self {
            InputSignal::Constant(v) => v,
            InputSignal::Relax { from, .. } => from,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match *self {
            InputSignal::Constant(v) => v,
            InputSignal::Relax { from, to, rate } => to + (from - to) * (-rate * t).exp(),
        }
    }

    /// Input rate `ρ_in` of this signal.
    pub fn rate(&self) -> f64 {
        match *self {
            InputSignal::Relax { from, to, rate } if from != to => rate,
            _ => f64::INFINITY,
        }
    }
}

/// A system ready to integrate: the circuit ODE (plus input drivers) and a
/// fully resolved initial state in variable order.
#[derive(Clone, Debug, PartialEq)]
pub struct Setup {
    pub ode: PolynomialOde,
    pub state: Vec<f64>,
}

/// A compiled expression: one flat ODE over namespaced species.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitInstance {
    pub title: String,
    pub expr: Option<Expr>,
    pub ode: PolynomialOde,
    pub inputs: Vec<InputBinding>,
    pub output: Rails,
    pub output_range: Interval,
    pub init_rules: Vec<InitRule>,
    pub conservation: Vec<ConservationLaw>,
    pub roster: Vec<RosterEntry>,
}

fn decl_of(bounds: &[Bound], dual: bool) -> Decl {
    if dual {
        return Decl { sign: SignTag::Real, range: Interval::REAL };
    }
    let lo = bounds.iter().fold(0.0f64, |lo, b| match *b {
        Bound::NonNegative => lo,
        Bound::Positive => lo.max(f64::MIN_POSITIVE),
        Bound::AtLeast(c) => lo.max(c),
    });
    Decl { sign: SignTag::NonNeg, range: Interval::new(lo, f64::INFINITY) }
}

impl CircuitInstance {
    /// Wraps a single library module; its input ports become the circuit
    /// inputs and local species names are kept.
    pub fn from_module(spec: &ModuleSpec) -> CircuitInstance {
        let inputs: Vec<InputBinding> = spec
            .inputs()
            .map(|p| {
                let bounds: Vec<Bound> =
                    spec.domain.0.iter().filter(|c| c.port == p.name).map(|c| c.bound).collect();
                InputBinding {
                    name: p.name.clone(),
                    rails: p.rails.clone(),
                    decl: decl_of(&bounds, matches!(p.rails, Rails::Dual { .. })),
                }
            })
            .collect();
        let port_ranges = inputs.iter().map(|b| (b.name.clone(), b.decl.range)).collect();
        CircuitInstance {
            title: spec.kind.to_string(),
            expr: None,
            ode: spec.ode.clone(),
            output: spec.output().rails.clone(),
            output_range: Interval::REAL,
            inputs,
            init_rules: spec.init.clone(),
            conservation: spec.conservation.clone(),
            roster: vec![RosterEntry {
                record: ComponentRecord {
                    path: spec.kind.to_string(),
                    kind: spec.kind,
                    flags: spec.flags,
                    rate: spec.rate.clone(),
                    domain: spec.domain.clone(),
                    bindings: spec.inputs().map(|p| (p.name.clone(), p.rails.clone())).collect(),
                    children: spec.components.clone(),
                },
                port_ranges,
            }],
        }
    }

    /// A bare system read from a network or ODE file: no inputs, every
    /// species free with initial value 0, and no rate guarantee.
    pub fn from_ode(title: &str, ode: PolynomialOde, output: SpeciesId) -> Result<CircuitInstance, CompileError> {
        if !ode.contains(&output) {
            return Err(ModuleError::UnknownSpecies(output.to_string()).into());
        }
        Ok(CircuitInstance {
            title: title.to_string(),
            expr: None,
            init_rules: ode.variables().iter().map(|s| InitRule::free(s.clone(), 0.0)).collect(),
            ode,
            inputs: vec![],
            output: Rails::Single(output),
            output_range: Interval::REAL,
            conservation: vec![],
            roster: vec![],
        })
    }

    /// Widens every input declaration to its sign's full range, so values
    /// outside a module's domain can be simulated (e.g. the rectified
    /// logarithm below 1).
    pub fn relax_domain(mut self) -> Self {
        for b in &mut self.inputs {
            b.decl.range = match b.decl.sign {
                SignTag::NonNeg => Interval::NONNEG,
                SignTag::Real => Interval::REAL,
            };
        }
        self
    }

    pub fn input(&self, name: &str) -> Option<&InputBinding> {
        self.inputs.iter().find(|b| b.name == name)
    }

    /// Predicted rate: the slowest top-level module, each at its worst case
    /// over the declared input ranges.
    pub fn predicted_rate(&self, input_rate: f64) -> f64 {
        self.roster.iter().map(|r| r.rate(input_rate)).fold(input_rate, f64::min)
    }

    /// `min{ρ_in, path: formula, ...}` over the roster.
    pub fn rate_formula(&self) -> String {
        let mut parts = vec!["ρ_in".to_string()];
        parts.extend(self.roster.iter().map(|r| format!("{}: {}", r.record.path, r.record.rate.checked())));
        format!("min{{{}}}", parts.join(", "))
    }

    /// Conjunction of the roster's flags; chemistry and mass-action are
    /// rechecked against the flattened ODE.
    pub fn flags(&self) -> Flags {
        let mut f = self.roster.iter().fold(Flags::ALL, |f, r| Flags {
            chemistry: f.chemistry && r.record.flags.chemistry,
            mass_action: f.mass_action && r.record.flags.mass_action,
            full_domain: f.full_domain && r.record.flags.full_domain,
            bounded_time: f.bounded_time && r.record.flags.bounded_time,
        });
        if self.roster.is_empty() {
            f.full_domain = false;
            f.bounded_time = false;
        }
        let realizable = self.ode.is_mass_action_realizable().realizable;
        f.mass_action &= realizable;
        f.chemistry &= realizable;
        f
    }

    pub fn network(&self) -> Result<ReactionNetwork, CrnError> {
        ReactionNetwork::from_ode(&self.ode)
    }

    pub fn output_value(&self, state: &[f64]) -> f64 {
        self.output.value(|s| state[self.ode.index_of(s).expect("output species in circuit")])
    }

    /// Initial state for constant inputs.
    pub fn resolve_init(&self, values: &BTreeMap<String, f64>) -> Result<Vec<f64>, CompileError> {
        self.resolve_init_with(values, &InitOptions::default())
    }

    pub fn resolve_init_with(&self, values: &BTreeMap<String, f64>, opts: &InitOptions) -> Result<Vec<f64>, CompileError> {
        let signals = values.iter().map(|(k, v)| (k.clone(), InputSignal::Constant(*v))).collect();
        Ok(self.setup(&signals, opts)?.state)
    }

    /// Builds the integrable system. Time-varying inputs get driver species
    /// `K` and `L` with `K + L -> K + L + R` and `K + R -> K`, so the input
    /// rail `R` relaxes to `L` at rate `K` inside the same mass-action ODE.
    pub fn setup(&self, signals: &BTreeMap<String, InputSignal>, opts: &InitOptions) -> Result<Setup, CompileError> {
        for name in signals.keys() {
            if self.input(name).is_none() {
                return Err(CompileError::UnknownInput(name.clone()));
            }
        }
        let mut ode = self.ode.clone();
        let mut start: BTreeMap<SpeciesId, f64> = BTreeMap::new();
        for b in &self.inputs {
            let sig = signals.get(&b.name).ok_or_else(|| CompileError::MissingInput(b.name.clone()))?;
            let limit = sig.limit();
            if !limit.is_finite() || !b.decl.range.contains(limit) {
                return Err(CompileError::Domain(format!(
                    "input {} = {limit} is outside its declared range {}",
                    b.name, b.decl.range
                )));
            }
            if let InputSignal::Relax { from, rate, .. } = *sig {
                if !(from.is_finite() && rate > 0.0 && rate.is_finite()) {
                    return Err(CompileError::Domain(format!("input {} has an invalid time course", b.name)));
                }
                if b.decl.sign == SignTag::NonNeg && from < 0.0 {
                    return Err(CompileError::Domain(format!("input {} must stay nonnegative", b.name)));
                }
            }
            let split = |v: f64| match &b.rails {
                Rails::Single(s) => vec![(s.clone(), v)],
                Rails::Dual { pos, neg } => vec![(pos.clone(), v.max(0.0)), (neg.clone(), (-v).max(0.0))],
            };
            let from = split(sig.initial());
            let to = split(limit);
            for ((s, v0), (_, v1)) in from.into_iter().zip(to) {
                if v0 != v1 {
                    let k = SpeciesId::new(format!("drive.{s}.K")).map_err(ModuleError::from)?;
                    let l = SpeciesId::new(format!("drive.{s}.L")).map_err(ModuleError::from)?;
                    ode.add_variable(k.clone()).map_err(ModuleError::from)?;
                    ode.add_variable(l.clone()).map_err(ModuleError::from)?;
                    let gain = Monomial::new(1.0, [(k.clone(), 1), (l.clone(), 1)]).map_err(ModuleError::from)?;
                    let loss = Monomial::new(-1.0, [(k.clone(), 1), (s.clone(), 1)]).map_err(ModuleError::from)?;
                    ode.add_term(&s, gain).map_err(ModuleError::from)?;
                    ode.add_term(&s, loss).map_err(ModuleError::from)?;
                    start.insert(k, sig.rate());
                    start.insert(l, v1);
                }
                start.insert(s, v0);
            }
        }
        let mut opts = opts.clone();
        for (s, v) in start {
            opts.overrides.insert(s, v);
        }
        let values = resolve(&self.init_rules, &opts)?;
        let state = ode
            .variables()
            .iter()
            .map(|s| values.get(s).copied().ok_or_else(|| CompileError::MissingInit(s.to_string())))
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(Setup { ode, state })
    }

    /// `key = value` sidecar describing the circuit.
    pub fn metadata(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("circuit = {}\n", self.title));
        if let Some(e) = &self.expr {
            out.push_str(&format!("expr = {e}\n"));
        }
        for b in &self.inputs {
            let sign = match b.decl.sign {
                SignTag::NonNeg => "nonneg",
                SignTag::Real => "real",
            };
            out.push_str(&format!("input.{} = {} {sign} {}\n", b.name, b.rails, b.decl.range));
        }
        out.push_str(&format!("output = {}\n", self.output));
        out.push_str(&format!("species = {}\n", self.ode.len()));
        let f = self.flags();
        out.push_str(&format!("flags.chemistry = {}\n", f.chemistry));
        out.push_str(&format!("flags.mass_action = {}\n", f.mass_action));
        out.push_str(&format!("flags.full_domain = {}\n", f.full_domain));
        out.push_str(&format!("flags.bounded_time = {}\n", f.bounded_time));
        out.push_str(&format!("rate = {}\n", self.rate_formula()));
        out.push_str(&format!("rate.constant_inputs = {}\n", self.predicted_rate(f64::INFINITY)));
        for r in &self.roster {
            out.push_str(&format!("roster.{} = {} ; {} ; {}\n", r.record.path, r.record.kind, r.record.rate, r.record.flags));
        }
        for r in &self.init_rules {
            out.push_str(&format!("init.{} = {r}\n", r.species));
        }
        for (i, law) in self.conservation.iter().enumerate() {
            out.push_str(&format!("conservation.{i} = {law}\n"));
        }
        out
    }
}

/// Compiled signal: rails plus ranges of the value and of each rail.
#[derive(Clone, Debug)]
struct Sig {
    rails: Rails,
    value: Interval,
    pos: Interval,
    neg: Interval,
    sign: SignTag,
}

struct Builder {
    asm: Assembly,
    opts: CompileOptions,
    counts: BTreeMap<String, usize>,
    roster: Vec<RosterEntry>,
    zero: Option<SpeciesId>,
    literals: usize,
}

fn single_sig(s: SpeciesId, value: Interval, sign: SignTag) -> Sig {
    Sig { rails: Rails::Single(s), value, pos: value, neg: Interval::point(0.0), sign }
}

impl Builder {
    fn fresh_path(&mut self, base: &str) -> String {
        let n = self.counts.entry(base.to_string()).or_insert(0);
        *n += 1;
        if *n == 1 {
            base.to_string()
        } else {
            format!("{base}_{n}")
        }
    }

    fn instantiate(&mut self, spec: &ModuleSpec, bindings: &[(&str, Rails, Interval)]) -> Result<Rails, CompileError> {
        let path = self.fresh_path(&spec.kind.name());
        for (port, _, range) in bindings {
            spec.domain.check(port, range.lo).map_err(|e| match e {
                ModuleError::DomainViolation(m) => CompileError::Domain(format!("{path}: {m}")),
                other => other.into(),
            })?;
        }
        let b: Vec<(&str, Rails)> = bindings.iter().map(|(p, r, _)| (*p, r.clone())).collect();
        let outs = self.asm.instantiate(&path, spec, &b)?;
        let record = self.asm.components().last().expect("just instantiated").clone();
        self.roster.push(RosterEntry {
            record,
            port_ranges: bindings.iter().map(|(p, _, r)| (p.to_string(), *r)).collect(),
        });
        let port = spec.outputs().next().expect("module output");
        Ok(outs[&port.name].clone())
    }

    fn fresh_species(&mut self, base: &str) -> SpeciesId {
        let mut k = 0;
        loop {
            let name = if k == 0 { base.to_string() } else { format!("{base}{k}") };
            let s = SpeciesId::new(name).expect("generated name");
            if !self.asm.contains(&s) {
                return s;
            }
            k += 1;
        }
    }

    fn zero(&mut self) -> SpeciesId {
        if let Some(z) = &self.zero {
            return z.clone();
        }
        let s = self.fresh_species("zero");
        let s = self.asm.constant(s.as_str(), 0.0).expect("fresh species");
        self.zero = Some(s.clone());
        s
    }

    fn is_zero(&self, s: &SpeciesId) -> bool {
        self.zero.as_ref() == Some(s)
    }

    fn rails_of(&mut self, sig: &Sig) -> (SpeciesId, SpeciesId) {
        match &sig.rails {
            Rails::Dual { pos, neg } => (pos.clone(), neg.clone()),
            Rails::Single(s) => (s.clone(), self.zero()),
        }
    }

    fn add1(&mut self, a: (SpeciesId, Interval), b: (SpeciesId, Interval)) -> Result<(SpeciesId, Interval), CompileError> {
        if self.is_zero(&a.0) {
            return Ok(b);
        }
        if self.is_zero(&b.0) {
            return Ok(a);
        }
        let r = self.instantiate(&mk_add(), &[("a", Rails::Single(a.0), a.1), ("b", Rails::Single(b.0), b.1)])?;
        Ok((single(r), Interval::new(a.1.lo + b.1.lo, a.1.hi + b.1.hi)))
    }

    fn mul1(&mut self, a: (SpeciesId, Interval), b: (SpeciesId, Interval)) -> Result<(SpeciesId, Interval), CompileError> {
        if self.is_zero(&a.0) || self.is_zero(&b.0) {
            return Ok((self.zero(), Interval::point(0.0)));
        }
        let r = self.instantiate(&mk_mul(), &[("a", Rails::Single(a.0), a.1), ("b", Rails::Single(b.0), b.1)])?;
        let p = |x: f64, y: f64| if x == 0.0 || y == 0.0 { 0.0 } else { x * y };
        Ok((single(r), Interval::new(p(a.1.lo, b.1.lo), p(a.1.hi, b.1.hi))))
    }

    fn dual(&self, pos: (SpeciesId, Interval), neg: (SpeciesId, Interval), value: Interval) -> Sig {
        Sig { rails: Rails::Dual { pos: pos.0, neg: neg.0 }, value, pos: pos.1, neg: neg.1, sign: SignTag::Real }
    }

    fn split(&mut self, s: &Sig) -> ((SpeciesId, Interval), (SpeciesId, Interval)) {
        let (p, n) = self.rails_of(s);
        ((p, s.pos), (n, s.neg))
    }

    fn node(&mut self, n: &Signed, inputs: &BTreeMap<String, Sig>) -> Result<Sig, CompileError> {
        let kids: Vec<Sig> = n.children.iter().map(|c| self.node(c, inputs)).collect::<Result<_, _>>()?;
        let single_in = |s: &Sig, what: &str| -> Result<(Rails, Interval), CompileError> {
            match &s.rails {
                Rails::Single(_) => Ok((s.rails.clone(), s.value)),
                Rails::Dual { .. } => Err(CompileError::Domain(format!(
                    "{what} of a dual-rail value is not supported; its argument must be a single nonnegative signal"
                ))),
            }
        };
        Ok(match &n.expr {
            Expr::Lit(v) => {
                let name = self.fresh_species(&format!("lit{}", self.literals));
                self.literals += 1;
                let s = self.asm.constant(name.as_str(), *v)?;
                single_sig(s, Interval::point(*v), SignTag::NonNeg)
            }
            Expr::Var(name) => inputs[name].clone(),
            Expr::Add(..) => {
                let (a, b) = (&kids[0], &kids[1]);
                if let (Rails::Single(x), Rails::Single(y)) = (&a.rails, &b.rails) {
                    let (s, _) = self.add1((x.clone(), a.value), (y.clone(), b.value))?;
                    single_sig(s, n.range, n.sign)
                } else {
                    let (ap, an) = self.split(a);
                    let (bp, bn) = self.split(b);
                    let p = self.add1(ap, bp)?;
                    let q = self.add1(an, bn)?;
                    self.dual(p, q, n.range)
                }
            }
            Expr::Sub(..) => {
                let (ap, an) = self.split(&kids[0]);
                let (bp, bn) = self.split(&kids[1]);
                let p = self.add1(ap, bn)?;
                let q = self.add1(an, bp)?;
                self.dual(p, q, n.range)
            }
            Expr::Neg(_) => {
                let (p, q) = self.split(&kids[0]);
                self.dual(q, p, n.range)
            }
            Expr::Mul(..) => self.mul(&kids[0], &kids[1], n)?,
            Expr::Div(..) => {
                let (b, br) = single_in(&kids[1], "division")?;
                let r = self.instantiate(&mk_reciprocal(), &[("a", b, br)])?;
                let inv = single_sig(single(r), Interval::new(1.0 / br.hi, 1.0 / br.lo), SignTag::NonNeg);
                self.mul(&kids[0], &inv, n)?
            }
            Expr::Exp(_) => {
                let a = &kids[0];
                match (&a.rails, a.sign) {
                    (Rails::Single(_), SignTag::NonNeg) => {
                        let r = self.instantiate(&mk_exp_nonneg(), &[("a", a.rails.clone(), a.value)])?;
                        single_sig(single(r), n.range, SignTag::NonNeg)
                    }
                    _ => {
                        let (p, q) = self.split(a);
                        let r = self.instantiate(&mk_exp_real(), &[("a", Rails::Dual { pos: p.0, neg: q.0 }, a.value)])?;
                        single_sig(single(r), n.range, SignTag::NonNeg)
                    }
                }
            }
            Expr::Ln(_) => {
                let (a, ar) = single_in(&kids[0], "ln")?;
                let system = self.opts.log_system.unwrap_or(if ar.lo >= 1.0 { LogSystem::S5 } else { LogSystem::S6 });
                let spec = system.module(self.opts.const_e);
                let out = self.instantiate(&spec, &[("a", a, ar)])?;
                let (lo, hi) = (ar.lo.ln(), ar.hi.ln());
                match (system, out) {
                    (LogSystem::S4, Rails::Dual { pos, neg }) => self.dual(
                        (pos, Interval::new(lo.max(0.0), hi.max(0.0))),
                        (neg, Interval::new((-hi).max(0.0), (-lo).max(0.0))),
                        n.range,
                    ),
                    (LogSystem::S5, Rails::Dual { pos, neg }) => {
                        self.dual((pos, Interval::new(1.0 + lo, 1.0 + hi)), (neg, Interval::point(1.0)), n.range)
                    }
                    (LogSystem::S6, Rails::Dual { pos, neg }) => self.dual(
                        (pos, Interval::new(1.0 + lo.max(0.0), 1.0 + hi.max(0.0))),
                        (neg, Interval::new(1.0 + (-hi).max(0.0), 1.0 + (-lo).max(0.0))),
                        n.range,
                    ),
                    (_, Rails::Single(s)) => single_sig(s, n.range, SignTag::Real),
                    (_, Rails::Dual { .. }) => unreachable!("log output shapes are fixed per system"),
                }
            }
            Expr::Root(_, m) => {
                let (a, ar) = single_in(&kids[0], "root")?;
                let r = self.instantiate(&mk_mth_root(*m)?, &[("a", a, ar)])?;
                single_sig(single(r), n.range, SignTag::NonNeg)
            }
            Expr::Max(..) | Expr::AbsDiff(..) => {
                let (a, ar) = single_in(&kids[0], "max")?;
                let (b, brg) = single_in(&kids[1], "max")?;
                let spec = if matches!(n.expr, Expr::Max(..)) { mk_max() } else { mk_abs_diff() };
                let r = self.instantiate(&spec, &[("a", a, ar), ("b", b, brg)])?;
                single_sig(single(r), n.range, SignTag::NonNeg)
            }
        })
    }

    fn mul(&mut self, a: &Sig, b: &Sig, n: &Signed) -> Result<Sig, CompileError> {
        if let (Rails::Single(x), Rails::Single(y)) = (&a.rails, &b.rails) {
            let (s, _) = self.mul1((x.clone(), a.value), (y.clone(), b.value))?;
            return Ok(single_sig(s, n.range, n.sign));
        }
        let (ap, an) = self.split(a);
        let (bp, bn) = self.split(b);
        let pp = self.mul1(ap.clone(), bp.clone())?;
        let nn = self.mul1(an.clone(), bn.clone())?;
        let pn = self.mul1(ap, bn)?;
        let np = self.mul1(an, bp)?;
        let p = self.add1(pp, nn)?;
        let q = self.add1(pn, np)?;
        Ok(self.dual(p, q, n.range))
    }
}

fn single(r: Rails) -> SpeciesId {
    match r {
        Rails::Single(s) => s,
        Rails::Dual { .. } => unreachable!("single-rail module output"),
    }
}

/// Compiles an annotated expression into a circuit.
pub fn compile(e: &Expr, decls: &Decls, opts: &CompileOptions) -> Result<CircuitInstance, CompileError> {
    let signed = infer_signs(e, decls)?;
    let mut b = Builder {
        asm: Assembly::new(),
        opts: *opts,
        counts: BTreeMap::new(),
        roster: Vec::new(),
        zero: None,
        literals: 0,
    };
    let mut inputs = Vec::new();
    let mut sigs = BTreeMap::new();
    for name in e.variables() {
        let decl = decls.get(&name);
        let sig = match decl.sign {
            SignTag::NonNeg => {
                let s = b.asm.input(&name)?;
                single_sig(s, decl.range, SignTag::NonNeg)
            }
            SignTag::Real => {
                let p = b.asm.input(&format!("{name}.p"))?;
                let q = b.asm.input(&format!("{name}.n"))?;
                Sig {
                    rails: Rails::Dual { pos: p, neg: q },
                    value: decl.range,
                    pos: decl.range.pos_part(),
                    neg: decl.range.neg_part(),
                    sign: SignTag::Real,
                }
            }
        };
        inputs.push(InputBinding { name: name.clone(), rails: sig.rails.clone(), decl });
        sigs.insert(name, sig);
    }
    let mut out = b.node(&signed, &sigs)?;
    if matches!(e, Expr::Var(_) | Expr::Lit(_)) {
        // A bare variable or literal still gets its own module.
        let rails = match out.rails.clone() {
            Rails::Single(s) => Rails::Single(single(b.instantiate(&mk_identity(), &[("a", Rails::Single(s), out.value)])?)),
            Rails::Dual { pos, neg } => Rails::Dual {
                pos: single(b.instantiate(&mk_identity(), &[("a", Rails::Single(pos), out.pos)])?),
                neg: single(b.instantiate(&mk_identity(), &[("a", Rails::Single(neg), out.neg)])?),
            },
        };
        out.rails = rails;
    }
    let Builder { asm, roster, .. } = b;
    let (ode, init_rules, conservation, _) = asm.into_parts();
    Ok(CircuitInstance {
        title: e.to_string(),
        expr: Some(e.clone()),
        ode,
        inputs,
        output: out.rails,
        output_range: signed.range,
        init_rules,
        conservation,
        roster,
    })
}

pub fn compile_str(text: &str, decls: &Decls, opts: &CompileOptions) -> Result<CircuitInstance, CompileError> {
    compile(&parse(text)?, decls, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::ModuleKind;
    use std::collections::BTreeSet;

    fn kinds(c: &CircuitInstance) -> BTreeSet<ModuleKind> {
        c.roster.iter().map(|r| r.record.kind).collect()
    }

    fn decls(items: &[&str]) -> Decls {
        Decls::parse(items).unwrap()
    }

    #[test]
    fn composite_roster_and_rate() {
        let c = compile_str("exp(a)*ln(b)", &decls(&["a:real", "b:nonneg(0.1,100)"]), &CompileOptions::default())
            .unwrap();
        assert_eq!(kinds(&c), BTreeSet::from([ModuleKind::ExpReal, ModuleKind::LogSystem6, ModuleKind::Mul]));
        assert_eq!(c.predicted_rate(f64::INFINITY), 1.0);
        assert_eq!(c.predicted_rate(2.0), 1.0);
        assert_eq!(c.predicted_rate(0.5), 0.5);
        assert!(matches!(c.output, Rails::Dual { .. }));
    }

    #[test]
    fn bare_variable_is_identity() {
        let c = compile_str("a", &Decls::default(), &CompileOptions::default()).unwrap();
        assert_eq!(kinds(&c), BTreeSet::from([ModuleKind::Identity]));
    }

    #[test]
    fn ln_of_sum_wires_add_into_log() {
        let c = compile_str("ln(a+b)", &decls(&["a:nonneg(1,2)", "b:nonneg(0,3)"]), &CompileOptions::default()).unwrap();
        assert_eq!(c.roster[0].record.kind, ModuleKind::Add);
        assert_eq!(c.roster[1].record.kind, ModuleKind::LogSystem5);
        let Rails::Single(sum) = &c.roster[0].record.bindings[0].1 else { panic!() };
        assert_eq!(sum.as_str(), "a");
        assert_eq!(c.roster[1].record.bindings[0].1, Rails::Single(SpeciesId::new("add.Z").unwrap()));
    }

    #[test]
    fn log_system_domain_rechecked() {
        let opts = CompileOptions { log_system: Some(LogSystem::S3), ..Default::default() };
        let err = compile_str("ln(a)", &decls(&["a:nonneg(0.5,2)"]), &opts).unwrap_err();
        assert!(matches!(err, CompileError::Domain(_)), "{err}");
        assert!(compile_str("ln(a)", &decls(&["a:nonneg(1,2)"]), &opts).is_ok());
    }

    #[test]
    fn deterministic_and_realizable() {
        let d = decls(&["a:real", "b:nonneg(0.1,100)"]);
        let x = compile_str("exp(a)*ln(b) - root(b, 2)/b", &d, &CompileOptions::default()).unwrap();
        let y = compile_str("exp(a)*ln(b) - root(b, 2)/b", &d, &CompileOptions::default()).unwrap();
        assert_eq!(x, y);
        assert!(x.ode.is_mass_action_realizable().realizable);
        assert!(x.flags().mass_action);
    }

    #[test]
    fn resolve_init_checks_ranges() {
        let c = compile_str("ln(b)", &decls(&["b:nonneg(0.1,100)"]), &CompileOptions::default()).unwrap();
        let ok = c.resolve_init(&BTreeMap::from([("b".to_string(), 2.0)])).unwrap();
        assert_eq!(ok.len(), c.ode.len());
        let values: BTreeMap<SpeciesId, f64> = c.ode.variables().iter().cloned().zip(ok).collect();
        for law in &c.conservation {
            assert!(law.eval(|s| values[s]).abs() < 1e-15);
        }
        let bad = c.resolve_init(&BTreeMap::from([("b".to_string(), 200.0)]));
        assert!(matches!(bad, Err(CompileError::Domain(_))));
        assert!(matches!(c.resolve_init(&BTreeMap::new()), Err(CompileError::MissingInput(_))));
    }

    #[test]
    fn drivers_extend_the_ode() {
        let c = compile_str("exp(a)", &decls(&["a:real"]), &CompileOptions::default()).unwrap();
        let sig = BTreeMap::from([("a".to_string(), InputSignal::Relax { from: 0.0, to: -1.0, rate: 2.0 })]);
        let s = c.setup(&sig, &InitOptions::default()).unwrap();
        assert_eq!(s.ode.len(), c.ode.len() + 2);
        assert!(s.ode.is_mass_action_realizable().realizable);
    }

    #[test]
    fn module_circuit_keeps_local_names() {
        let c = CircuitInstance::from_module(&mk_log_system3());
        assert_eq!(c.input("a").unwrap().decl.range.lo, 1.0);
        assert_eq!(c.network().unwrap().reactions().len(), 4);
        assert!(c.clone().relax_domain().resolve_init(&BTreeMap::from([("a".to_string(), 0.5)])).is_ok());
        assert!(c.resolve_init(&BTreeMap::from([("a".to_string(), 0.5)])).is_err());
    }
}
