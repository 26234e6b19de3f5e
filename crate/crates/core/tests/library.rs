use crncalc::crn::{parse_network, parse_ode, write_network, write_ode, ReactionNetwork};
use crncalc::library::*;

#[test]
fn flags_agree_with_the_realizability_check() {
    for spec in catalog() {
        let r = spec.ode.is_mass_action_realizable();
        assert_eq!(spec.flags.mass_action, r.realizable, "{}: {:?}", spec.kind, r.witness);
        if spec.flags.mass_action {
            assert!(spec.flags.chemistry, "{}", spec.kind);
        }
    }
}

#[test]
fn inputs_are_catalytic_and_never_evolve() {
    for spec in catalog() {
        for s in spec.input_species() {
            assert!(spec.ode.rhs(s).is_empty(), "{}: input {s} has dynamics", spec.kind);
        }
        if let Ok(net) = ReactionNetwork::from_ode(&spec.ode) {
            for s in spec.input_species() {
                assert!(net.reactions().iter().all(|r| r.net(s) == 0), "{}: {s} consumed", spec.kind);
            }
        }
    }
}

#[test]
fn every_species_has_exactly_one_init_rule_or_is_an_input() {
    for spec in catalog() {
        let init = spec.default_init();
        let inputs = spec.input_species();
        for s in spec.ode.variables() {
            assert!(init.contains_key(s) != inputs.contains(&s), "{}: {s}", spec.kind);
        }
    }
}

#[test]
fn text_formats_round_trip_for_the_catalog() {
    for spec in catalog() {
        let ode_text = write_ode(&spec.ode, &spec.kind.name());
        assert_eq!(parse_ode(&ode_text).unwrap(), spec.ode, "{}", spec.kind);
        if let Ok(net) = ReactionNetwork::from_ode(&spec.ode) {
            let text = write_network(&net, &spec.kind.name());
            let back = parse_network(&text).unwrap();
            assert_eq!(back.reactions(), net.reactions(), "{}", spec.kind);
            assert!(back.derive_ode().same_system(&spec.ode), "{}", spec.kind);
            assert_eq!(write_network(&back, &spec.kind.name()), text);
        }
    }
}

#[test]
fn system3_listing_is_stable() {
    let net = ReactionNetwork::from_ode(&mk_log_system3().ode).unwrap();
    assert_eq!(
        write_network(&net, "log3"),
        "# crncalc network: log3\n\
         A + X -> A + 2X ; k=1\n\
         X + Z -> Z ; k=1\n\
         A + X + Z -> A + X + 2Z ; k=1\n\
         X + 2Z -> X + Z ; k=1\n"
    );
}

#[test]
fn metadata_lists_ports_rate_and_flags() {
    let m = mk_log_system6(ConstEMode::Static).metadata();
    assert!(m.starts_with("module = log6\n"));
    assert!(m.contains("port.in.a = "));
    assert!(m.contains("flags.full_domain = true"));
    assert!(m.contains("component.scale_n = divide"));
    let m = mk_counterexample().metadata();
    assert!(m.contains("flags.bounded_time = false") || m.contains("flags.full_domain = false"), "{m}");
}

#[test]
fn names_are_unique() {
    let mut names: Vec<String> = catalog().iter().map(|s| s.kind.name()).collect();
    let n = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), n);
}
