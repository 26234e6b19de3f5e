//! Species, complexes, reactions and the polynomial ODEs they induce under
//! mass-action kinetics.

mod format;
mod ode;

pub use format::{parse_network, parse_ode, write_network, write_ode};
pub use ode::{CompiledOde, Monomial, PolynomialOde, Realizability};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest stoichiometric coefficient accepted in a complex.
pub const MAX_STOICHIOMETRY: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrnError {
    #[error("invalid species name `{0}`")]
    InvalidSpecies(String),
    #[error("stoichiometric coefficient {coefficient} for `{species}` exceeds {MAX_STOICHIOMETRY}")]
    Stoichiometry { species: String, coefficient: u32 },
    #[error("reaction has identical reactant and product `{0}`")]
    TrivialReaction(String),
    #[error("rate constant {0} must be positive and finite")]
    RateConstant(f64),
    #[error("species `{0}` declared twice")]
    DuplicateSpecies(String),
    #[error("species `{0}` is used but not declared")]
    UndeclaredSpecies(String),
    #[error("monomial coefficient must be finite and nonzero")]
    ZeroCoefficient,
    #[error("ODE is not mass-action realizable: negative term `{term}` in d{species}/dt lacks a factor of {species}")]
    NotRealizable { species: String, term: String },
    #[error("coefficient {coefficient} in d{species}/dt is not +1 or -1")]
    NonUnitCoefficient { species: String, coefficient: f64 },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Namespaced species name such as `log6.step4.Z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeciesId(String);

impl SpeciesId {
    pub fn new(name: impl Into<String>) -> Result<Self, CrnError> {
        let name = name.into();
        if is_valid_name(&name) {
            Ok(SpeciesId(name))
        } else {
            Err(CrnError::InvalidSpecies(name))
        }
    }

    /// `prefix.self`, or `self` when the prefix is empty.
    pub fn within(&self, prefix: &str) -> SpeciesId {
        if prefix.is_empty() {
            self.clone()
        } else {
            SpeciesId(format!("{prefix}.{}", self.0))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.split('.').all(|seg| {
            let mut chars = seg.chars();
            match chars.next() {
                Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
                }
                _ => false,
            }
        })
}

impl fmt::Display for SpeciesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SpeciesId {
    type Err = CrnError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpeciesId::new(s)
    }
}

/// Shorthand used by the module factories, where names are literals.
pub(crate) fn sp(name: &str) -> SpeciesId {
    SpeciesId::new(name).expect("literal species name")
}

/// A multiset of species; the empty complex is written `0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Complex {
    coefficients: BTreeMap<SpeciesId, u32>,
}

impl Complex {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I>(terms: I) -> Result<Self, CrnError>
    where
        I: IntoIterator<Item = (SpeciesId, u32)>,
    {
        let mut coefficients = BTreeMap::new();
        for (s, c) in terms {
            if c == 0 {
                continue;
            }
            let entry = coefficients.entry(s.clone()).or_insert(0);
            *entry += c;
            if *entry > MAX_STOICHIOMETRY {
                return Err(CrnError::Stoichiometry { species: s.0, coefficient: *entry });
            }
        }
        Ok(Complex { coefficients })
    }

    pub fn coefficient(&self, s: &SpeciesId) -> u32 {
        self.coefficients.get(s).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SpeciesId, u32)> {
        self.coefficients.iter().map(|(s, c)| (s, *c))
    }

    pub fn species(&self) -> impl Iterator<Item = &SpeciesId> {
        self.coefficients.keys()
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficients.is_empty() {
            return f.write_str("0");
        }
        for (i, (s, c)) in self.coefficients.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if *c == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{c}{s}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate_constant: f64,
}

impl Reaction {
    pub fn new(reactant: Complex, product: Complex, rate_constant: f64) -> Result<Self, CrnError> {
        if reactant == product {
            return Err(CrnError::TrivialReaction(reactant.to_string()));
        }
        if !(rate_constant.is_finite() && rate_constant > 0.0) {
            return Err(CrnError::RateConstant(rate_constant));
        }
        Ok(Reaction { reactant, product, rate_constant })
    }

    /// Unit-rate reaction.
    pub fn unit(reactant: Complex, product: Complex) -> Result<Self, CrnError> {
        Self::new(reactant, product, 1.0)
    }

    /// Net change of `s` when the reaction fires once.
    pub fn net(&self, s: &SpeciesId) -> i64 {
        self.product.coefficient(s) as i64 - self.reactant.coefficient(s) as i64
    }
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} ; k={}", self.reactant, self.product, self.rate_constant)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<SpeciesId>,
    reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new(species: Vec<SpeciesId>, reactions: Vec<Reaction>) -> Result<Self, CrnError> {
        let mut seen = BTreeSet::new();
        for s in &species {
            if !seen.insert(s) {
                return Err(CrnError::DuplicateSpecies(s.to_string()));
            }
        }
        for r in &reactions {
            for s in r.reactant.species().chain(r.product.species()) {
                if !seen.contains(s) {
                    return Err(CrnError::UndeclaredSpecies(s.to_string()));
                }
            }
        }
        Ok(ReactionNetwork { species, reactions })
    }

    /// Declares species implicitly, in order of first appearance.
    pub fn from_reactions(reactions: Vec<Reaction>) -> Self {
        let mut species: Vec<SpeciesId> = Vec::new();
        let mut seen = BTreeSet::new();
        for r in &reactions {
            for s in r.reactant.species().chain(r.product.species()) {
                if seen.insert(s.clone()) {
                    species.push(s.clone());
                }
            }
        }
        ReactionNetwork { species, reactions }
    }

    pub fn species(&self) -> &[SpeciesId] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Mass-action vector field of the network.
    pub fn derive_ode(&self) -> PolynomialOde {
        let mut ode = PolynomialOde::new(self.species.clone())
            .expect("network species are distinct by construction");
        for r in &self.reactions {
            let powers: BTreeMap<SpeciesId, u32> =
                r.reactant.iter().map(|(s, c)| (s.clone(), c)).collect();
            let touched: BTreeSet<&SpeciesId> =
                r.reactant.species().chain(r.product.species()).collect();
            for s in touched {
                let net = r.net(s);
                if net != 0 {
                    let m = Monomial::from_powers(r.rate_constant * net as f64, powers.clone());
                    ode.add_term(s, m).expect("declared species");
                }
            }
        }
        ode
    }

    /// Canonical inverse of [`ReactionNetwork::derive_ode`]: one unit-rate
    /// reaction per monomial, changing only the target species by one.
    pub fn from_ode(ode: &PolynomialOde) -> Result<Self, CrnError> {
        let check = ode.is_mass_action_realizable();
        if let Some((s, m)) = check.witness {
            return Err(CrnError::NotRealizable { species: s.to_string(), term: m.to_string() });
        }
        let mut reactions = Vec::new();
        for s in ode.variables() {
            for m in ode.rhs(s) {
                let c = m.coefficient();
                let sign = if (c - 1.0).abs() <= 1e-12 {
                    1
                } else if (c + 1.0).abs() <= 1e-12 {
                    -1
                } else {
                    return Err(CrnError::NonUnitCoefficient { species: s.to_string(), coefficient: c });
                };
                let reactant = Complex::new(m.powers().iter().map(|(s, p)| (s.clone(), *p)))?;
                let mut product: BTreeMap<SpeciesId, u32> =
                    m.powers().iter().map(|(s, p)| (s.clone(), *p)).collect();
                let entry = product.entry(s.clone()).or_insert(0);
                if sign > 0 {
                    *entry += 1;
                } else {
                    *entry -= 1;
                }
                let product = Complex::new(product)?;
                reactions.push(Reaction::unit(reactant, product)?);
            }
        }
        ReactionNetwork::new(ode.variables().to_vec(), reactions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(terms: &[(&str, u32)]) -> Complex {
        Complex::new(terms.iter().map(|(s, c)| (sp(s), *c))).unwrap()
    }

    #[test]
    fn species_names() {
        assert!(SpeciesId::new("log6.step2.Z").is_ok());
        assert!(SpeciesId::new("X_p").is_ok());
        for bad in ["", "a..b", ".a", "2Z", "a-b", "a b"] {
            assert!(SpeciesId::new(bad).is_err(), "{bad}");
        }
        assert_eq!(sp("Z").within("log3").as_str(), "log3.Z");
        assert_eq!(sp("Z").within("").as_str(), "Z");
    }

    #[test]
    fn stoichiometry_is_bounded() {
        assert!(Complex::new([(sp("X"), 4)]).is_ok());
        assert!(matches!(Complex::new([(sp("X"), 3), (sp("X"), 2)]), Err(CrnError::Stoichiometry { .. })));
    }

    #[test]
    fn reaction_invariants() {
        assert!(Reaction::unit(cx(&[("X", 1)]), cx(&[("X", 1)])).is_err());
        assert!(Reaction::new(cx(&[("X", 1)]), Complex::empty(), 0.0).is_err());
        assert!(Reaction::new(cx(&[("X", 1)]), Complex::empty(), f64::NAN).is_err());
    }

    #[test]
    fn network_requires_declared_species() {
        let r = Reaction::unit(cx(&[("X", 1)]), Complex::empty()).unwrap();
        assert!(matches!(ReactionNetwork::new(vec![], vec![r.clone()]), Err(CrnError::UndeclaredSpecies(_))));
        assert!(matches!(
            ReactionNetwork::new(vec![sp("X"), sp("X")], vec![r]),
            Err(CrnError::DuplicateSpecies(_))
        ));
    }

    #[test]
    fn addition_network_ode() {
        let net = ReactionNetwork::from_reactions(vec![
            Reaction::unit(cx(&[("X", 1)]), cx(&[("X", 1), ("Z", 1)])).unwrap(),
            Reaction::unit(cx(&[("Y", 1)]), cx(&[("Y", 1), ("Z", 1)])).unwrap(),
            Reaction::unit(cx(&[("Z", 1)]), Complex::empty()).unwrap(),
        ]);
        let ode = net.derive_ode();
        assert!(ode.rhs(&sp("X")).is_empty());
        assert!(ode.rhs(&sp("Y")).is_empty());
        assert_eq!(ode.format_rhs(&sp("Z")), "X + Y - Z");
    }

    #[test]
    fn empty_network_has_zero_field() {
        let net = ReactionNetwork::new(vec![sp("A"), sp("B")], vec![]).unwrap();
        let ode = net.derive_ode();
        assert!(ode.variables().iter().all(|s| ode.rhs(s).is_empty()));
    }

    #[test]
    fn system3_network_ode_and_inverse() {
        let net = ReactionNetwork::from_reactions(vec![
            Reaction::unit(cx(&[("A", 1), ("Z", 1), ("X", 1)]), cx(&[("A", 1), ("Z", 2), ("X", 1)])).unwrap(),
            Reaction::unit(cx(&[("Z", 2), ("X", 1)]), cx(&[("Z", 1), ("X", 1)])).unwrap(),
            Reaction::unit(cx(&[("A", 1), ("X", 1)]), cx(&[("A", 1), ("X", 2)])).unwrap(),
            Reaction::unit(cx(&[("Z", 1), ("X", 1)]), cx(&[("Z", 1)])).unwrap(),
        ]);
        let ode = net.derive_ode();
        assert_eq!(ode.format_rhs(&sp("Z")), "A*X*Z - X*Z^2");
        assert_eq!(ode.format_rhs(&sp("X")), "A*X - X*Z");
        let back = ReactionNetwork::from_ode(&ode).unwrap();
        assert_eq!(back.reactions().len(), 4);
        for r in net.reactions() {
            assert!(back.reactions().contains(r), "missing {r}");
        }
        assert!(back.derive_ode().same_system(&ode));
    }

    #[test]
    fn inverse_rejects_non_realizable_and_non_unit() {
        let mut ode = PolynomialOde::new(vec![sp("X"), sp("Z")]).unwrap();
        ode.add_term(&sp("X"), Monomial::constant(1.0)).unwrap();
        ode.add_term(&sp("X"), Monomial::new(-1.0, [(sp("Z"), 1)]).unwrap()).unwrap();
        assert!(matches!(ReactionNetwork::from_ode(&ode), Err(CrnError::NotRealizable { .. })));

        let mut ode = PolynomialOde::new(vec![sp("X")]).unwrap();
        ode.add_term(&sp("X"), Monomial::constant(2.0)).unwrap();
        assert!(matches!(ReactionNetwork::from_ode(&ode), Err(CrnError::NonUnitCoefficient { .. })));
    }
}
