use std::collections::{BTreeMap, BTreeSet};

use super::CompileError;
use crate::crn::SpeciesId;
use crate::library::{Init, InitRule, ModuleError};

/// Tolerance on `x(0) = ln(of(0))` when a user override is checked.
pub const INIT_TOLERANCE: f64 = 1e-12;

/// User overrides of initial values. Unless `force` is set, an override of a
/// log-derived species must agree with the logarithm of its dependency.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InitOptions {
    pub overrides: BTreeMap<SpeciesId, f64>,
    pub force: bool,
}

impl InitOptions {
    pub fn with(mut self, species: &str, value: f64) -> Result<Self, CompileError> {
        self.overrides.insert(SpeciesId::new(species).map_err(ModuleError::from)?, value);
        Ok(self)
    }

    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }
}

/// Evaluates init rules in dependency order, applying overrides.
pub fn evaluate_init_rules(
    rules: &[InitRule],
    overrides: &BTreeMap<SpeciesId, f64>,
) -> Result<BTreeMap<SpeciesId, f64>, CompileError> {
    resolve(rules, &InitOptions { overrides: overrides.clone(), force: false })
}

pub(crate) fn resolve(rules: &[InitRule], opts: &InitOptions) -> Result<BTreeMap<SpeciesId, f64>, CompileError> {
    let by_species: BTreeMap<&SpeciesId, &InitRule> = rules.iter().map(|r| (&r.species, r)).collect();
    let mut values = BTreeMap::new();
    for r in rules {
        eval(&r.species, &by_species, opts, &mut values, &mut BTreeSet::new())?;
    }
    for (s, v) in &opts.overrides {
        if !by_species.contains_key(s) {
            values.entry(s.clone()).or_insert(*v);
        }
    }
    Ok(values)
}

fn eval(
    s: &SpeciesId,
    rules: &BTreeMap<&SpeciesId, &InitRule>,
    opts: &InitOptions,
    values: &mut BTreeMap<SpeciesId, f64>,
    visiting: &mut BTreeSet<SpeciesId>,
) -> Result<f64, CompileError> {
    if let Some(v) = values.get(s) {
        return Ok(*v);
    }
    let Some(rule) = rules.get(s) else {
        return opts.overrides.get(s).copied().ok_or_else(|| CompileError::MissingInit(s.to_string()));
    };
    if !visiting.insert(s.clone()) {
        return Err(CompileError::CyclicInit(s.to_string()));
    }
    let over = opts.overrides.get(s).copied();
    let v = match &rule.rule {
        Init::Fixed(v) | Init::Free(v) => over.unwrap_or(*v),
        Init::DerivedLog(of) => {
            let base = eval(of, rules, opts, values, visiting)?;
            if !(base > 0.0) {
                return Err(ModuleError::InitViolation {
                    species: s.to_string(),
                    log_of: of.to_string(),
                    expected: f64::NAN,
                    found: base,
                }
                .into());
            }
            let expected = base.ln();
            match over {
                Some(found) if opts.force => found,
                Some(found) if (found - expected).abs() > INIT_TOLERANCE * expected.abs().max(1.0) => {
                    return Err(ModuleError::InitViolation {
                        species: s.to_string(),
                        log_of: of.to_string(),
                        expected,
                        found,
                    }
                    .into())
                }
                _ => expected,
            }
        }
    };
    if !v.is_finite() {
        return Err(CompileError::Domain(format!("initial value of {s} is not finite")));
    }
    visiting.remove(s);
    values.insert(s.clone(), v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::sp;
    use crate::library::{mk_exp_nonneg, mk_log_system4n, mk_log_system6, ConstEMode};
    use std::f64::consts::E;

    #[test]
    fn exp_defaults() {
        let v = mk_exp_nonneg().default_init();
        assert_eq!(v[&sp("X")], 1.0);
        assert_eq!(v[&sp("Z")], 0.0);
    }

    #[test]
    fn system4n_defaults() {
        let v = mk_log_system4n().default_init();
        assert_eq!(v[&sp("Y")], E);
        assert_eq!(v[&sp("X_n")], 1.0);
    }

    #[test]
    fn overrides_and_violations() {
        let rules = mk_exp_nonneg().init;
        let ok = resolve(&rules, &InitOptions::default().with("X", 2.0).unwrap()).unwrap();
        assert_eq!(ok[&sp("Z")], 2f64.ln());
        let bad = InitOptions::default().with("X", 2.0).unwrap().with("Z", 0.0).unwrap();
        assert!(matches!(resolve(&rules, &bad), Err(CompileError::Module(ModuleError::InitViolation { .. }))));
        let forced = resolve(&rules, &bad.forced()).unwrap();
        assert_eq!((forced[&sp("X")], forced[&sp("Z")]), (2.0, 0.0));
    }

    #[test]
    fn cycles_are_rejected() {
        let rules = vec![InitRule::derived_log(sp("X"), sp("Y")), InitRule::derived_log(sp("Y"), sp("X"))];
        assert!(matches!(evaluate_init_rules(&rules, &BTreeMap::new()), Err(CompileError::CyclicInit(_))));
    }

    #[test]
    fn system6_rules_satisfy_conservation() {
        let spec = mk_log_system6(ConstEMode::Static);
        let mut v = spec.default_init();
        v.insert(sp("A"), 2.0);
        for law in &spec.conservation {
            assert!(law.eval(|s| v[s]).abs() < 1e-15, "{law}");
        }
    }
}
