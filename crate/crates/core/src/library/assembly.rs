use std::collections::{BTreeMap, BTreeSet};

use super::{ComponentRecord, ConservationLaw, Direction, InitRule, ModuleError, ModuleSpec, Rails};
use crate::crn::{PolynomialOde, SpeciesId};

/// Output rails of an instantiated module, by port name.
pub type Outputs = BTreeMap<String, Rails>;

/// Incrementally wires module instances into one flat ODE. Every instance
/// lives under its own path prefix; input ports are bound by substituting
/// upstream species, so downstream modules read them catalytically from
/// `t = 0`.
#[derive(Clone, Debug, Default)]
pub struct Assembly {
    ode: PolynomialOde,
    init: Vec<InitRule>,
    conservation: Vec<ConservationLaw>,
    components: Vec<ComponentRecord>,
    externals: BTreeSet<SpeciesId>,
}

impl Assembly {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares an externally driven species (no dynamics, no init rule).
    pub fn input(&mut self, name: &str) -> Result<SpeciesId, ModuleError> {
        let s = SpeciesId::new(name)?;
        self.ode.add_variable(s.clone())?;
        self.externals.insert(s.clone());
        Ok(s)
    }

    /// Declares a static species held at `value`.
    pub fn constant(&mut self, name: &str, value: f64) -> Result<SpeciesId, ModuleError> {
        let s = SpeciesId::new(name)?;
        if self.ode.contains(&s) {
            return Err(ModuleError::Collision(s.to_string()));
        }
        self.ode.add_variable(s.clone())?;
        self.init.push(InitRule::fixed(s.clone(), value));
        Ok(s)
    }

    pub fn contains(&self, s: &SpeciesId) -> bool {
        self.ode.contains(s)
    }

    pub fn instantiate(
        &mut self,
        path: &str,
        spec: &ModuleSpec,
        bindings: &[(&str, Rails)],
    ) -> Result<Outputs, ModuleError> {
        let module = format!("{path} ({})", spec.kind);
        let mut subst: BTreeMap<SpeciesId, SpeciesId> = BTreeMap::new();
        let mut bound = Vec::new();
        for port in spec.inputs() {
            let (_, rails) = bindings
                .iter()
                .find(|(name, _)| *name == port.name)
                .ok_or_else(|| ModuleError::UnboundPort { module: module.clone(), port: port.name.clone() })?;
            match (&port.rails, rails) {
                (Rails::Single(local), Rails::Single(up)) => {
                    subst.insert(local.clone(), up.clone());
                }
                (Rails::Dual { pos, neg }, Rails::Dual { pos: up, neg: un }) => {
                    subst.insert(pos.clone(), up.clone());
                    subst.insert(neg.clone(), un.clone());
                }
                (expected, _) => {
                    return Err(ModuleError::PortShape {
                        module: module.clone(),
                        port: port.name.clone(),
                        expected: expected.shape(),
                    })
                }
            }
            bound.push((port.name.clone(), rails.clone()));
        }
        for (local, up) in &subst {
            if !spec.ode.rhs(local).is_empty() {
                return Err(ModuleError::NonCatalyticInput(local.to_string()));
            }
            if !self.ode.contains(up) {
                return Err(ModuleError::UnknownSpecies(up.to_string()));
            }
        }
        let rename = |s: &SpeciesId| subst.get(s).cloned().unwrap_or_else(|| s.within(path));

        for s in spec.ode.variables().iter().filter(|s| !subst.contains_key(*s)) {
            let target = rename(s);
            if self.ode.contains(&target) {
                return Err(ModuleError::Collision(target.to_string()));
            }
            self.ode.add_variable(target)?;
        }
        for s in spec.ode.variables().iter().filter(|s| !subst.contains_key(*s)) {
            let target = rename(s);
            for m in spec.ode.rhs(s) {
                let m = crate::crn::Monomial::new(
                    m.coefficient(),
                    m.powers().iter().map(|(s, p)| (rename(s), *p)),
                )?;
                self.ode.add_term(&target, m)?;
            }
        }
        self.init.extend(spec.init.iter().map(|r| r.renamed(&rename)));
        self.conservation.extend(spec.conservation.iter().map(|c| c.renamed(&rename)));
        self.components.push(ComponentRecord {
            path: path.to_string(),
            kind: spec.kind,
            flags: spec.flags,
            rate: spec.rate.clone(),
            domain: spec.domain.clone(),
            bindings: bound,
            children: spec.components.iter().map(|c| prefixed(c, path, &rename)).collect(),
        });
        Ok(spec
            .ports
            .iter()
            .filter(|p| p.direction == Direction::Output)
            .map(|p| (p.name.clone(), p.rails.map(rename)))
            .collect())
    }

    pub fn ode(&self) -> &PolynomialOde {
        &self.ode
    }

    pub fn components(&self) -> &[ComponentRecord] {
        &self.components
    }

    pub fn into_parts(self) -> (PolynomialOde, Vec<InitRule>, Vec<ConservationLaw>, Vec<ComponentRecord>) {
        (self.ode, self.init, self.conservation, self.components)
    }
}

fn prefixed(c: &ComponentRecord, path: &str, rename: &dyn Fn(&SpeciesId) -> SpeciesId) -> ComponentRecord {
    ComponentRecord {
        path: format!("{path}.{}", c.path),
        kind: c.kind,
        flags: c.flags,
        rate: c.rate.clone(),
        domain: c.domain.clone(),
        bindings: c.bindings.iter().map(|(n, r)| (n.clone(), r.map(rename))).collect(),
        children: c.children.iter().map(|k| prefixed(k, path, rename)).collect(),
    }
}
