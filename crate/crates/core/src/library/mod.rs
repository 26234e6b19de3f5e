//! Reusable computational modules: an ODE fragment plus ports, initial
//! conditions, an input domain, a rate guarantee and taxonomy flags.

mod assembly;
mod factories;
mod rate;

pub use assembly::{Assembly, Outputs};
pub use factories::*;
pub use rate::{RateExpr, RateGuarantee};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::crn::{CrnError, PolynomialOde, SpeciesId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModuleError {
    #[error(transparent)]
    Crn(#[from] CrnError),
    #[error("input port `{port}` of `{module}` is not bound")]
    UnboundPort { module: String, port: String },
    #[error("port `{port}` of `{module}` expects a {expected} signal")]
    PortShape { module: String, port: String, expected: &'static str },
    #[error("species `{0}` is written by two modules")]
    Collision(String),
    #[error("species `{0}` is not part of the circuit")]
    UnknownSpecies(String),
    #[error("input species `{0}` is not catalytic inside its module")]
    NonCatalyticInput(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("initialization violates ln {log_of}(0) = {species}(0): expected {expected}, found {found}")]
    InitViolation { species: String, log_of: String, expected: f64, found: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

/// Single species, or a dual-rail pair read as `pos - neg`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rails {
    Single(SpeciesId),
    Dual { pos: SpeciesId, neg: SpeciesId },
}

impl Rails {
    pub fn species(&self) -> Vec<&SpeciesId> {
        match self {
            Rails::Single(s) => vec![s],
            Rails::Dual { pos, neg } => vec![pos, neg],
        }
    }

    /// Value encoded by the rails given a species lookup.
    pub fn value(&self, get: impl Fn(&SpeciesId) -> f64) -> f64 {
        match self {
            Rails::Single(s) => get(s),
            Rails::Dual { pos, neg } => get(pos) - get(neg),
        }
    }

    pub fn map(&self, f: impl Fn(&SpeciesId) -> SpeciesId) -> Rails {
        match self {
            Rails::Single(s) => Rails::Single(f(s)),
            Rails::Dual { pos, neg } => Rails::Dual { pos: f(pos), neg: f(neg) },
        }
    }

    fn shape(&self) -> &'static str {
        match self {
            Rails::Single(_) => "single-rail",
            Rails::Dual { .. } => "dual-rail",
        }
    }
}

impl fmt::Display for Rails {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rails::Single(s) => write!(f, "single {s}"),
            Rails::Dual { pos, neg } => write!(f, "dual {pos} {neg}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Port {
    pub name: String,
    pub rails: Rails,
    pub direction: Direction,
}

impl Port {
    pub fn input(name: &str, rails: Rails) -> Self {
        Port { name: name.to_string(), rails, direction: Direction::Input }
    }

    pub fn output(name: &str, rails: Rails) -> Self {
        Port { name: name.to_string(), rails, direction: Direction::Output }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Fixed(f64),
    /// `species(0) = ln(of(0))`.
    DerivedLog(SpeciesId),
    Free(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitRule {
    pub species: SpeciesId,
    pub rule: Init,
}

impl InitRule {
    pub fn fixed(species: SpeciesId, value: f64) -> Self {
        InitRule { species, rule: Init::Fixed(value) }
    }

    pub fn free(species: SpeciesId, default: f64) -> Self {
        InitRule { species, rule: Init::Free(default) }
    }

    pub fn derived_log(species: SpeciesId, of: SpeciesId) -> Self {
        InitRule { species, rule: Init::DerivedLog(of) }
    }

    fn renamed(&self, map: &dyn Fn(&SpeciesId) -> SpeciesId) -> Self {
        let rule = match &self.rule {
            Init::DerivedLog(of) => Init::DerivedLog(map(of)),
            other => other.clone(),
        };
        InitRule { species: map(&self.species), rule }
    }
}

impl fmt::Display for InitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Init::Fixed(v) => write!(f, "fixed {v}"),
            Init::DerivedLog(of) => write!(f, "ln {of}"),
            Init::Free(v) => write!(f, "free {v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    NonNegative,
    Positive,
    AtLeast(f64),
}

impl Bound {
    pub fn admits(&self, value: f64) -> bool {
        match *self {
            Bound::NonNegative => value >= 0.0,
            Bound::Positive => value > 0.0,
            Bound::AtLeast(c) => value >= c,
        }
    }
}

/// Constraint on the limit of one input port.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainConstraint {
    pub port: String,
    pub bound: Bound,
}

impl fmt::Display for DomainConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bound {
            Bound::NonNegative => write!(f, "{} >= 0", self.port),
            Bound::Positive => write!(f, "{} > 0", self.port),
            Bound::AtLeast(c) => write!(f, "{} >= {c}", self.port),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Domain(pub Vec<DomainConstraint>);

impl Domain {
    pub fn of(constraints: &[(&str, Bound)]) -> Self {
        Domain(constraints.iter().map(|(p, b)| DomainConstraint { port: p.to_string(), bound: *b }).collect())
    }

    /// Checks the smallest value the port can take.
    pub fn check(&self, port: &str, lower: f64) -> Result<(), ModuleError> {
        for c in self.0.iter().filter(|c| c.port == port) {
            if !c.bound.admits(lower) {
                return Err(ModuleError::DomainViolation(format!("{c} required, got {port} = {lower}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        if parts.is_empty() {
            f.write_str("any")
        } else {
            f.write_str(&parts.join(", "))
        }
    }
}

/// Taxonomy of a construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub chemistry: bool,
    pub mass_action: bool,
    pub full_domain: bool,
    pub bounded_time: bool,
}

impl Flags {
    pub const ALL: Flags = Flags { chemistry: true, mass_action: true, full_domain: true, bounded_time: true };
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "chemistry={} mass_action={} full_domain={} bounded_time={}",
            self.chemistry, self.mass_action, self.full_domain, self.bounded_time
        )
    }
}

/// First integral tying an output to an auxiliary species.
#[derive(Clone, Debug, PartialEq)]
pub enum ConservationLaw {
    /// `ln(log_of) - minus`
    LnMinus { log_of: SpeciesId, minus: SpeciesId },
    /// `value - ln(log_of)`
    MinusLn { value: SpeciesId, log_of: SpeciesId },
}

impl ConservationLaw {
    pub fn eval(&self, get: impl Fn(&SpeciesId) -> f64) -> f64 {
        match self {
            ConservationLaw::LnMinus { log_of, minus } => get(log_of).ln() - get(minus),
            ConservationLaw::MinusLn { value, log_of } => get(value) - get(log_of).ln(),
        }
    }

    pub fn species(&self) -> [&SpeciesId; 2] {
        match self {
            ConservationLaw::LnMinus { log_of, minus } => [log_of, minus],
            ConservationLaw::MinusLn { value, log_of } => [value, log_of],
        }
    }

    fn renamed(&self, map: &dyn Fn(&SpeciesId) -> SpeciesId) -> Self {
        match self {
            ConservationLaw::LnMinus { log_of, minus } => {
                ConservationLaw::LnMinus { log_of: map(log_of), minus: map(minus) }
            }
            ConservationLaw::MinusLn { value, log_of } => {
                ConservationLaw::MinusLn { value: map(value), log_of: map(log_of) }
            }
        }
    }
}

impl fmt::Display for ConservationLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConservationLaw::LnMinus { log_of, minus } => write!(f, "ln {log_of} - {minus}"),
            ConservationLaw::MinusLn { value, log_of } => write!(f, "{value} - ln {log_of}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModuleKind {
    Constant,
    Identity,
    Add,
    Mul,
    Reciprocal,
    Divide,
    MthRoot(u32),
    RectifiedSub,
    AbsDiff,
    Max,
    ExpNonneg,
    ExpReal,
    LogSystem1,
    LogSystem1r,
    LogSystem2,
    LogSystem3,
    LogSystem4p,
    LogSystem4n,
    LogSystem4,
    LogSystem5,
    LogSystem6,
    ConstE,
    Counterexample,
}

impl ModuleKind {
    pub fn name(&self) -> String {
        match self {
            ModuleKind::Constant => "const".into(),
            ModuleKind::Identity => "identity".into(),
            ModuleKind::Add => "add".into(),
            ModuleKind::Mul => "mul".into(),
            ModuleKind::Reciprocal => "reciprocal".into(),
            ModuleKind::Divide => "divide".into(),
            ModuleKind::MthRoot(m) => format!("root{m}"),
            ModuleKind::RectifiedSub => "rect_sub".into(),
            ModuleKind::AbsDiff => "abs_diff".into(),
            ModuleKind::Max => "max".into(),
            ModuleKind::ExpNonneg => "exp_nonneg".into(),
            ModuleKind::ExpReal => "exp_real".into(),
            ModuleKind::LogSystem1 => "log1".into(),
            ModuleKind::LogSystem1r => "log1r".into(),
            ModuleKind::LogSystem2 => "log2".into(),
            ModuleKind::LogSystem3 => "log3".into(),
            ModuleKind::LogSystem4p => "log4p".into(),
            ModuleKind::LogSystem4n => "log4n".into(),
            ModuleKind::LogSystem4 => "log4".into(),
            ModuleKind::LogSystem5 => "log5".into(),
            ModuleKind::LogSystem6 => "log6".into(),
            ModuleKind::ConstE => "const_e".into(),
            ModuleKind::Counterexample => "counterexample".into(),
        }
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One instantiated module inside a circuit, with its own sub-roster.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentRecord {
    pub path: String,
    pub kind: ModuleKind,
    pub flags: Flags,
    pub rate: RateGuarantee,
    pub domain: Domain,
    pub bindings: Vec<(String, Rails)>,
    pub children: Vec<ComponentRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuleSpec {
    pub kind: ModuleKind,
    pub ode: PolynomialOde,
    pub ports: Vec<Port>,
    pub init: Vec<InitRule>,
    pub domain: Domain,
    pub rate: RateGuarantee,
    pub flags: Flags,
    pub conservation: Vec<ConservationLaw>,
    pub components: Vec<ComponentRecord>,
}

impl ModuleSpec {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Output)
    }

    /// The unique output port; every factory has exactly one.
    pub fn output(&self) -> &Port {
        self.outputs().next().expect("module has an output port")
    }

    pub fn input_species(&self) -> Vec<&SpeciesId> {
        self.inputs().flat_map(|p| p.rails.species()).collect()
    }

    /// Default initial state of every non-input species.
    pub fn default_init(&self) -> BTreeMap<SpeciesId, f64> {
        crate::compiler::evaluate_init_rules(&self.init, &BTreeMap::new())
            .expect("factory init rules are acyclic")
    }

    /// Key/value metadata block describing the module.
    pub fn metadata(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("module = {}\n", self.kind));
        for p in &self.ports {
            let dir = match p.direction {
                Direction::Input => "in",
                Direction::Output => "out",
            };
            out.push_str(&format!("port.{dir}.{} = {}\n", p.name, p.rails));
        }
        for r in &self.init {
            out.push_str(&format!("init.{} = {r}\n", r.species));
        }
        out.push_str(&format!("domain = {}\n", self.domain));
        out.push_str(&format!("rate = {}\n", self.rate));
        if let Some(c) = &self.rate.certified {
            out.push_str(&format!("rate.certified = {c}\n"));
        }
        out.push_str(&format!("flags.chemistry = {}\n", self.flags.chemistry));
        out.push_str(&format!("flags.mass_action = {}\n", self.flags.mass_action));
        out.push_str(&format!("flags.full_domain = {}\n", self.flags.full_domain));
        out.push_str(&format!("flags.bounded_time = {}\n", self.flags.bounded_time));
        for (i, law) in self.conservation.iter().enumerate() {
            out.push_str(&format!("conservation.{i} = {law}\n"));
        }
        for c in &self.components {
            out.push_str(&format!("component.{} = {}\n", c.path, c.kind));
        }
        out
    }
}
