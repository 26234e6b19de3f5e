use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{CrnError, SpeciesId};

/// `coefficient * prod(species^power)`; an empty power map is a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    coefficient: f64,
    powers: BTreeMap<SpeciesId, u32>,
}

impl Monomial {
    pub fn new<I>(coefficient: f64, powers: I) -> Result<Self, CrnError>
    where
        I: IntoIterator<Item = (SpeciesId, u32)>,
    {
        if !coefficient.is_finite() || coefficient == 0.0 {
            return Err(CrnError::ZeroCoefficient);
        }
        let mut map = BTreeMap::new();
        for (s, p) in powers {
            if p > 0 {
                *map.entry(s).or_insert(0) += p;
            }
        }
        Ok(Monomial { coefficient, powers: map })
    }

    pub(crate) fn from_powers(coefficient: f64, powers: BTreeMap<SpeciesId, u32>) -> Self {
        Monomial { coefficient, powers }
    }

    pub fn constant(coefficient: f64) -> Self {
        Monomial::new(coefficient, []).expect("nonzero constant")
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn powers(&self) -> &BTreeMap<SpeciesId, u32> {
        &self.powers
    }

    pub fn power_of(&self, s: &SpeciesId) -> u32 {
        self.powers.get(s).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.powers.values().sum()
    }

    fn renamed(&self, map: &dyn Fn(&SpeciesId) -> SpeciesId) -> Monomial {
        let mut powers = BTreeMap::new();
        for (s, p) in &self.powers {
            *powers.entry(map(s)).or_insert(0) += *p;
        }
        Monomial { coefficient: self.coefficient, powers }
    }

    fn format_factors(&self) -> String {
        self.powers
            .iter()
            .map(|(s, p)| if *p == 1 { s.to_string() } else { format!("{s}^{p}") })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let factors = self.format_factors();
        if factors.is_empty() {
            write!(f, "{}", self.coefficient)
        } else if self.coefficient == 1.0 {
            f.write_str(&factors)
        } else if self.coefficient == -1.0 {
            write!(f, "-{factors}")
        } else {
            write!(f, "{}*{factors}", self.coefficient)
        }
    }
}

/// Result of the mass-action realizability check.
#[derive(Clone, Debug, PartialEq)]
pub struct Realizability {
    pub realizable: bool,
    /// A negative term of `d(species)/dt` that lacks a factor of `species`.
    pub witness: Option<(SpeciesId, Monomial)>,
}

/// Polynomial vector field over named species. Monomials are kept merged
/// and sorted by power map, which makes structural equality canonical.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolynomialOde {
    variables: Vec<SpeciesId>,
    index: BTreeMap<SpeciesId, usize>,
    rhs: Vec<Vec<Monomial>>,
}

impl PolynomialOde {
    pub fn new(variables: Vec<SpeciesId>) -> Result<Self, CrnError> {
        let mut ode = PolynomialOde::default();
        for v in variables {
            ode.add_variable(v)?;
        }
        Ok(ode)
    }

    pub fn add_variable(&mut self, v: SpeciesId) -> Result<(), CrnError> {
        if self.index.contains_key(&v) {
            return Err(CrnError::DuplicateSpecies(v.to_string()));
        }
        self.index.insert(v.clone(), self.variables.len());
        self.variables.push(v);
        self.rhs.push(Vec::new());
        Ok(())
    }

    pub fn variables(&self) -> &[SpeciesId] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, s: &SpeciesId) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &SpeciesId) -> bool {
        self.index.contains_key(s)
    }

    /// Right-hand side of `d(s)/dt`; empty for constant or unknown species.
    pub fn rhs(&self, s: &SpeciesId) -> &[Monomial] {
        self.index_of(s).map(|i| self.rhs[i].as_slice()).unwrap_or(&[])
    }

    /// Adds a term to `d(target)/dt`, merging with an existing monomial of
    /// the same powers and dropping it if the coefficients cancel.
    pub fn add_term(&mut self, target: &SpeciesId, m: Monomial) -> Result<(), CrnError> {
        let i = self.index_of(target).ok_or_else(|| CrnError::UndeclaredSpecies(target.to_string()))?;
        for s in m.powers.keys() {
            if !self.index.contains_key(s) {
                return Err(CrnError::UndeclaredSpecies(s.to_string()));
            }
        }
        let terms = &mut self.rhs[i];
        match terms.binary_search_by(|t| t.powers.cmp(&m.powers)) {
            Ok(j) => {
                let c = terms[j].coefficient + m.coefficient;
                if c == 0.0 || c.abs() <= 1e-14 * m.coefficient.abs().max(terms[j].coefficient.abs()) {
                    terms.remove(j);
                } else {
                    terms[j].coefficient = c;
                }
            }
            Err(j) => terms.insert(j, m),
        }
        Ok(())
    }

    /// Builds a term from literal names; used by the module factories.
    pub(crate) fn term(&mut self, target: &str, coefficient: f64, factors: &[(&str, u32)]) {
        let m = Monomial::new(coefficient, factors.iter().map(|(s, p)| (super::sp(s), *p)))
            .expect("nonzero literal coefficient");
        self.add_term(&super::sp(target), m).expect("factory species are declared");
    }

    /// Hárs–Tóth check: every negative term of `dx/dt` must contain `x`.
    pub fn is_mass_action_realizable(&self) -> Realizability {
        for (s, terms) in self.variables.iter().zip(&self.rhs) {
            if let Some(m) = terms.iter().find(|m| m.coefficient < 0.0 && m.power_of(s) == 0) {
                return Realizability { realizable: false, witness: Some((s.clone(), m.clone())) };
            }
        }
        Realizability { realizable: true, witness: None }
    }

    /// Equality up to variable order.
    pub fn same_system(&self, other: &PolynomialOde) -> bool {
        let mine: BTreeSet<&SpeciesId> = self.variables.iter().collect();
        let theirs: BTreeSet<&SpeciesId> = other.variables.iter().collect();
        mine == theirs && self.variables.iter().all(|s| self.rhs(s) == other.rhs(s))
    }

    /// Copy of the system with every species renamed by `map`. Fails if two
    /// species collide.
    pub fn renamed(&self, map: &dyn Fn(&SpeciesId) -> SpeciesId) -> Result<PolynomialOde, CrnError> {
        let mut out = PolynomialOde::new(self.variables.iter().map(map).collect())?;
        for (s, terms) in self.variables.iter().zip(&self.rhs) {
            let target = map(s);
            for m in terms {
                out.add_term(&target, m.renamed(map))?;
            }
        }
        Ok(out)
    }

    /// Human-readable right-hand side, `0` when empty.
    pub fn format_rhs(&self, s: &SpeciesId) -> String {
        let terms = self.rhs(s);
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, m) in terms.iter().enumerate() {
            let factors = m.format_factors();
            let c = m.coefficient;
            let sign = if c < 0.0 { "-" } else { "+" };
            let mag = c.abs();
            let body = match (factors.is_empty(), mag == 1.0) {
                (true, _) => format!("{mag}"),
                (false, true) => factors,
                (false, false) => format!("{mag}*{factors}"),
            };
            if i == 0 {
                if c < 0.0 {
                    out.push('-');
                }
            } else {
                out.push(' ');
                out.push_str(sign);
                out.push(' ');
            }
            out.push_str(&body);
        }
        out
    }

    /// Index-based form for fast evaluation.
    pub fn compile(&self) -> CompiledOde {
        let mut terms = Vec::new();
        for (target, ms) in self.rhs.iter().enumerate() {
            for m in ms {
                let factors = m
                    .powers
                    .iter()
                    .map(|(s, p)| (self.index[s], *p))
                    .collect();
                terms.push(Term { target, coefficient: m.coefficient, factors });
            }
        }
        CompiledOde { dim: self.variables.len(), terms }
    }
}

#[derive(Clone, Debug)]
struct Term {
    target: usize,
    coefficient: f64,
    factors: Vec<(usize, u32)>,
}

/// Evaluation-ready vector field.
#[derive(Clone, Debug)]
pub struct CompiledOde {
    dim: usize,
    terms: Vec<Term>,
}

impl CompiledOde {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, y: &[f64], dy: &mut [f64]) {
        dy.iter_mut().for_each(|d| *d = 0.0);
        for t in &self.terms {
            let mut v = t.coefficient;
            for &(i, p) in &t.factors {
                v *= match p {
                    1 => y[i],
                    2 => y[i] * y[i],
                    _ => y[i].powi(p as i32),
                };
            }
            dy[t.target] += v;
        }
    }
}
