//! Module factories. All rate constants are 1; inputs are read
//! catalytically and may vary in time.

use std::f64::consts::E;

use super::{
    Assembly, Bound, ConservationLaw, Domain, Flags, InitRule, ModuleError, ModuleKind, ModuleSpec, Port, RateExpr,
    RateGuarantee, Rails,
};
use crate::crn::{sp, PolynomialOde};

/// Seed for rectified subtraction; `z = 0` is a fixed point of its dynamics.
pub const RECT_SUB_SEED: f64 = 1e-6;

/// How the constant `e` used by Systems 5 and 6 is provided.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConstEMode {
    /// A species initialized to `e` with no dynamics.
    #[default]
    Static,
    /// The exponential module driven by a constant input of 1.
    Synthesized,
}

fn single(name: &str) -> Rails {
    Rails::Single(sp(name))
}

fn dual(pos: &str, neg: &str) -> Rails {
    Rails::Dual { pos: sp(pos), neg: sp(neg) }
}

fn ode(vars: &[&str]) -> PolynomialOde {
    PolynomialOde::new(vars.iter().map(|v| sp(v)).collect()).expect("distinct literal names")
}

const NO_MASS_ACTION: Flags = Flags { chemistry: false, mass_action: false, full_domain: true, bounded_time: true };

struct Leaf {
    kind: ModuleKind,
    ode: PolynomialOde,
    ports: Vec<Port>,
    init: Vec<InitRule>,
    domain: Domain,
    rate: RateGuarantee,
    flags: Flags,
    conservation: Vec<ConservationLaw>,
}

impl Leaf {
    fn build(self) -> ModuleSpec {
        ModuleSpec {
            kind: self.kind,
            ode: self.ode,
            ports: self.ports,
            init: self.init,
            domain: self.domain,
            rate: self.rate,
            flags: self.flags,
            conservation: self.conservation,
            components: Vec::new(),
        }
    }
}

fn composite(
    kind: ModuleKind,
    asm: Assembly,
    ports: Vec<Port>,
    domain: Domain,
    rate: RateGuarantee,
    flags: Flags,
) -> ModuleSpec {
    let (ode, init, conservation, components) = asm.into_parts();
    ModuleSpec { kind, ode, ports, init, domain, rate, flags, conservation, components }
}

/// Static species held at `value`.
pub fn mk_constant(value: f64) -> Result<ModuleSpec, ModuleError> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(ModuleError::InvalidParameter(format!("constant {value} must be finite and nonnegative")));
    }
    Ok(Leaf {
        kind: ModuleKind::Constant,
        ode: ode(&["C"]),
        ports: vec![Port::output("out", single("C"))],
        init: vec![InitRule::fixed(sp("C"), value)],
        domain: Domain::default(),
        rate: RateGuarantee::at_least(RateExpr::Const(f64::INFINITY)),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build())
}

/// `dz/dt = a - z`: `A -> A + Z`, `Z -> 0`.
pub fn mk_identity() -> ModuleSpec {
    let mut o = ode(&["A", "Z"]);
    o.term("Z", 1.0, &[("A", 1)]);
    o.term("Z", -1.0, &[("Z", 1)]);
    Leaf {
        kind: ModuleKind::Identity,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("Z"))],
        init: vec![InitRule::free(sp("Z"), 0.0)],
        domain: Domain::of(&[("a", Bound::NonNegative)]),
        rate: RateGuarantee::unit(),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build()
}

/// `dz/dt = a + b - z`.
pub fn mk_add() -> ModuleSpec {
    let mut o = ode(&["A", "B", "Z"]);
    o.term("Z", 1.0, &[("A", 1)]);
    o.term("Z", 1.0, &[("B", 1)]);
    o.term("Z", -1.0, &[("Z", 1)]);
    Leaf {
        kind: ModuleKind::Add,
        ode: o,
        ports: vec![
            Port::input("a", single("A")),
            Port::input("b", single("B")),
            Port::output("out", single("Z")),
        ],
        init: vec![InitRule::free(sp("Z"), 0.0)],
        domain: Domain::of(&[("a", Bound::NonNegative), ("b", Bound::NonNegative)]),
        rate: RateGuarantee::unit(),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build()
}

/// `dz/dt = ab - z`.
pub fn mk_mul() -> ModuleSpec {
    let mut o = ode(&["A", "B", "Z"]);
    o.term("Z", 1.0, &[("A", 1), ("B", 1)]);
    o.term("Z", -1.0, &[("Z", 1)]);
    Leaf {
        kind: ModuleKind::Mul,
        ode: o,
        ports: vec![
            Port::input("a", single("A")),
            Port::input("b", single("B")),
            Port::output("out", single("Z")),
        ],
        init: vec![InitRule::free(sp("Z"), 0.0)],
        domain: Domain::of(&[("a", Bound::NonNegative), ("b", Bound::NonNegative)]),
        rate: RateGuarantee::unit(),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build()
}

/// `dy/dt = y(1 - a y)`.
pub fn mk_reciprocal() -> ModuleSpec {
    let mut o = ode(&["A", "Y"]);
    o.term("Y", 1.0, &[("Y", 1)]);
    o.term("Y", -1.0, &[("A", 1), ("Y", 2)]);
    Leaf {
        kind: ModuleKind::Reciprocal,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("Y"))],
        init: vec![InitRule::free(sp("Y"), 1.0)],
        domain: Domain::of(&[("a", Bound::Positive)]),
        rate: RateGuarantee::unit(),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build()
}

/// `A + Y -> A + 2Y`, `B + 2Y -> B + Y`: `dy/dt = y(a - b y)`, converging
/// to `a/b` at rate `min{ρ, a*}`.
pub fn mk_divide() -> ModuleSpec {
    let mut o = ode(&["A", "B", "Y"]);
    o.term("Y", 1.0, &[("A", 1), ("Y", 1)]);
    o.term("Y", -1.0, &[("B", 1), ("Y", 2)]);
    Leaf {
        kind: ModuleKind::Divide,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::input("b", single("B")), Port::output("out", single("Y"))],
        init: vec![InitRule::free(sp("Y"), 1.0)],
        domain: Domain::of(&[("a", Bound::Positive), ("b", Bound::Positive)]),
        rate: RateGuarantee::at_least(RateExpr::capped(RateExpr::limit("a"))),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build()
}

/// `dx/dt = x(a - x^m)`, converging to `a^(1/m)`.
pub fn mk_mth_root(m: u32) -> Result<ModuleSpec, ModuleError> {
    if m == 0 {
        return Err(ModuleError::InvalidParameter("root order must be at least 1".into()));
    }
    let mut o = ode(&["A", "X"]);
    o.term("X", 1.0, &[("A", 1), ("X", 1)]);
    o.term("X", -1.0, &[("X", m + 1)]);
    let rate = RateExpr::capped(RateExpr::mul(RateExpr::Const(m as f64), RateExpr::limit("a")));
    Ok(Leaf {
        kind: ModuleKind::MthRoot(m),
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("X"))],
        init: vec![InitRule::free(sp("X"), 1.0)],
        domain: Domain::of(&[("a", Bound::Positive)]),
        rate: RateGuarantee::at_least(rate),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build())
}

/// `dz/dt = z(a - b - z)` from a small seed, converging to `max(a - b, 0)`.
/// Linearizing at the limit gives rate `|a* - b*|`, which vanishes at ties.
pub fn mk_rectified_sub() -> ModuleSpec {
    let mut o = ode(&["A", "B", "Z"]);
    o.term("Z", 1.0, &[("A", 1), ("Z", 1)]);
    o.term("Z", -1.0, &[("B", 1), ("Z", 1)]);
    o.term("Z", -1.0, &[("Z", 2)]);
    Leaf {
        kind: ModuleKind::RectifiedSub,
        ode: o,
        ports: vec![
            Port::input("a", single("A")),
            Port::input("b", single("B")),
            Port::output("out", single("Z")),
        ],
        init: vec![InitRule::free(sp("Z"), RECT_SUB_SEED)],
        domain: Domain::of(&[("a", Bound::NonNegative), ("b", Bound::NonNegative)]),
        rate: gap_rate(),
        flags: Flags::ALL,
        conservation: vec![],
    }
    .build()
}

fn gap_rate() -> RateGuarantee {
    RateGuarantee::at_least(RateExpr::capped(RateExpr::gap("a", "b")))
}

fn summed_gap_rate() -> RateGuarantee {
    RateGuarantee::at_least(RateExpr::Min(vec![RateExpr::InputRate, RateExpr::Const(1.0), RateExpr::gap("a", "b")]))
}

fn two_input_assembly() -> (Assembly, Rails, Rails) {
    let mut asm = Assembly::new();
    let a = asm.input("A").expect("fresh assembly");
    let b = asm.input("B").expect("fresh assembly");
    (asm, Rails::Single(a), Rails::Single(b))
}

fn out(o: &super::Outputs) -> Rails {
    o["out"].clone()
}

/// `rect_sub(a, b) + rect_sub(b, a)`.
pub fn mk_abs_diff() -> ModuleSpec {
    let (mut asm, a, b) = two_input_assembly();
    let ab = asm.instantiate("ab", &mk_rectified_sub(), &[("a", a.clone()), ("b", b.clone())]).unwrap();
    let ba = asm.instantiate("ba", &mk_rectified_sub(), &[("a", b), ("b", a)]).unwrap();
    let sum = asm.instantiate("sum", &mk_add(), &[("a", out(&ab)), ("b", out(&ba))]).unwrap();
    composite(
        ModuleKind::AbsDiff,
        asm,
        vec![Port::input("a", single("A")), Port::input("b", single("B")), Port::output("out", out(&sum))],
        Domain::of(&[("a", Bound::NonNegative), ("b", Bound::NonNegative)]),
        summed_gap_rate(),
        Flags::ALL,
    )
}

/// `a + rect_sub(b, a)`.
pub fn mk_max() -> ModuleSpec {
    let (mut asm, a, b) = two_input_assembly();
    let gap = asm.instantiate("gap", &mk_rectified_sub(), &[("a", b), ("b", a.clone())]).unwrap();
    let sum = asm.instantiate("sum", &mk_add(), &[("a", a), ("b", out(&gap))]).unwrap();
    composite(
        ModuleKind::Max,
        asm,
        vec![Port::input("a", single("A")), Port::input("b", single("B")), Port::output("out", out(&sum))],
        Domain::of(&[("a", Bound::NonNegative), ("b", Bound::NonNegative)]),
        summed_gap_rate(),
        Flags::ALL,
    )
}

/// `A -> A + Z`, `Z -> 0`, `A + X -> A + 2X`, `Z + X -> Z`; with
/// `ln x(0) = z(0)` the output satisfies `x(t) = e^{z(t)}`.
pub fn mk_exp_nonneg() -> ModuleSpec {
    let mut o = ode(&["A", "X", "Z"]);
    o.term("Z", 1.0, &[("A", 1)]);
    o.term("Z", -1.0, &[("Z", 1)]);
    o.term("X", 1.0, &[("A", 1), ("X", 1)]);
    o.term("X", -1.0, &[("X", 1), ("Z", 1)]);
    Leaf {
        kind: ModuleKind::ExpNonneg,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("X"))],
        init: vec![InitRule::fixed(sp("X"), 1.0), InitRule::derived_log(sp("Z"), sp("X"))],
        domain: Domain::of(&[("a", Bound::NonNegative)]),
        rate: RateGuarantee::unit(),
        flags: Flags::ALL,
        conservation: vec![ConservationLaw::LnMinus { log_of: sp("X"), minus: sp("Z") }],
    }
    .build()
}

/// `e^{a_p} * (1 / e^{a_n})` for a dual-rail input.
pub fn mk_exp_real() -> ModuleSpec {
    let mut asm = Assembly::new();
    let ap = Rails::Single(asm.input("A_p").unwrap());
    let an = Rails::Single(asm.input("A_n").unwrap());
    let pos = asm.instantiate("pos", &mk_exp_nonneg(), &[("a", ap)]).unwrap();
    let neg = asm.instantiate("neg", &mk_exp_nonneg(), &[("a", an)]).unwrap();
    let inv = asm.instantiate("inv", &mk_reciprocal(), &[("a", out(&neg))]).unwrap();
    let prod = asm.instantiate("prod", &mk_mul(), &[("a", out(&pos)), ("b", out(&inv))]).unwrap();
    composite(
        ModuleKind::ExpReal,
        asm,
        vec![Port::input("a", dual("A_p", "A_n")), Port::output("out", out(&prod))],
        Domain::default(),
        RateGuarantee::unit(),
        Flags::ALL,
    )
}

fn log_leaf(kind: ModuleKind, domain: Domain, rate: RateGuarantee, flags: Flags, o: PolynomialOde) -> ModuleSpec {
    Leaf {
        kind,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("X"))],
        init: vec![InitRule::fixed(sp("Z"), E), InitRule::derived_log(sp("X"), sp("Z"))],
        domain,
        rate,
        flags,
        conservation: vec![ConservationLaw::MinusLn { value: sp("X"), log_of: sp("Z") }],
    }
    .build()
}

fn system1_ode() -> PolynomialOde {
    let mut o = ode(&["A", "X", "Z"]);
    o.term("X", 1.0, &[("A", 1)]);
    o.term("X", -1.0, &[("Z", 1)]);
    o.term("Z", 1.0, &[("A", 1), ("Z", 1)]);
    o.term("Z", -1.0, &[("Z", 2)]);
    o
}

/// System 1: `dx/dt = a - z`, `dz/dt = z(a - z)`. Converges at rate exactly
/// `a` for constant input.
pub fn mk_log_system1() -> ModuleSpec {
    log_leaf(
        ModuleKind::LogSystem1,
        Domain::of(&[("a", Bound::Positive)]),
        RateGuarantee::exactly(RateExpr::capped(RateExpr::limit("a"))),
        Flags { chemistry: false, mass_action: false, full_domain: true, bounded_time: false },
        system1_ode(),
    )
}

/// System 1 restricted to `a* >= 1`, where `z >= 1` is invariant.
pub fn mk_log_system1r() -> ModuleSpec {
    log_leaf(
        ModuleKind::LogSystem1r,
        Domain::of(&[("a", Bound::AtLeast(1.0))]),
        RateGuarantee::unit(),
        Flags { chemistry: true, mass_action: false, full_domain: false, bounded_time: true },
        system1_ode(),
    )
}

/// System 2: `dy/dt = y(1 - a y)`, `dx/dt = 1 - y z`, `dz/dt = z(1 - y z)`.
pub fn mk_log_system2() -> ModuleSpec {
    let mut o = ode(&["A", "X", "Y", "Z"]);
    o.term("Y", 1.0, &[("Y", 1)]);
    o.term("Y", -1.0, &[("A", 1), ("Y", 2)]);
    o.term("X", 1.0, &[]);
    o.term("X", -1.0, &[("Y", 1), ("Z", 1)]);
    o.term("Z", 1.0, &[("Z", 1)]);
    o.term("Z", -1.0, &[("Y", 1), ("Z", 2)]);
    let mut spec = log_leaf(
        ModuleKind::LogSystem2,
        Domain::of(&[("a", Bound::Positive)]),
        RateGuarantee::unit(),
        NO_MASS_ACTION,
        o,
    );
    spec.init.insert(0, InitRule::free(sp("Y"), 1.0));
    spec
}

fn add_system3_terms(o: &mut PolynomialOde, z: &str, x: &str) {
    o.term(z, 1.0, &[("A", 1), (x, 1), (z, 1)]);
    o.term(z, -1.0, &[(x, 1), (z, 2)]);
    o.term(x, 1.0, &[("A", 1), (x, 1)]);
    o.term(x, -1.0, &[(x, 1), (z, 1)]);
}

fn add_system4n_terms(o: &mut PolynomialOde, y: &str, x: &str) {
    o.term(y, 1.0, &[(x, 1), (y, 1)]);
    o.term(y, -1.0, &[("A", 1), (x, 1), (y, 2)]);
    o.term(x, 1.0, &[(x, 1)]);
    o.term(x, -1.0, &[("A", 1), (x, 1), (y, 1)]);
}

fn system3_rate() -> RateGuarantee {
    RateGuarantee::at_least(RateExpr::capped(RateExpr::mul(RateExpr::limit("a"), RateExpr::ln(RateExpr::limit("a")))))
}

/// System 3: `dz/dt = (a - z) x z`, `dx/dt = (a - z) x`. Computes the
/// rectified logarithm `max(ln a*, 0)`.
pub fn mk_log_system3() -> ModuleSpec {
    let mut o = ode(&["A", "X", "Z"]);
    add_system3_terms(&mut o, "Z", "X");
    log_leaf(
        ModuleKind::LogSystem3,
        Domain::of(&[("a", Bound::AtLeast(1.0))]),
        system3_rate(),
        Flags { chemistry: true, mass_action: true, full_domain: false, bounded_time: false },
        o,
    )
}

/// Positive rail of System 4: `ln a*` for `a* >= 1`, else 0.
pub fn mk_log_system4p() -> ModuleSpec {
    let mut o = ode(&["A", "X_p", "Z"]);
    add_system3_terms(&mut o, "Z", "X_p");
    Leaf {
        kind: ModuleKind::LogSystem4p,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("X_p"))],
        init: vec![InitRule::fixed(sp("Z"), E), InitRule::derived_log(sp("X_p"), sp("Z"))],
        domain: Domain::of(&[("a", Bound::Positive)]),
        rate: system3_rate(),
        flags: Flags { chemistry: true, mass_action: true, full_domain: false, bounded_time: false },
        conservation: vec![ConservationLaw::MinusLn { value: sp("X_p"), log_of: sp("Z") }],
    }
    .build()
}

fn system4_rate() -> RateGuarantee {
    let a = RateExpr::limit("a");
    RateGuarantee::at_least(RateExpr::capped(RateExpr::mul(
        RateExpr::Max(vec![a.clone(), RateExpr::Const(1.0)]),
        RateExpr::Abs(Box::new(RateExpr::ln(a))),
    )))
}

/// Negative rail of System 4: `dy/dt = (1 - a y) x_n y`,
/// `dx_n/dt = (1 - a y) x_n`; `-ln a*` for `a* < 1`, else 0.
pub fn mk_log_system4n() -> ModuleSpec {
    let mut o = ode(&["A", "X_n", "Y"]);
    add_system4n_terms(&mut o, "Y", "X_n");
    Leaf {
        kind: ModuleKind::LogSystem4n,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("X_n"))],
        init: vec![InitRule::fixed(sp("Y"), E), InitRule::derived_log(sp("X_n"), sp("Y"))],
        domain: Domain::of(&[("a", Bound::Positive)]),
        rate: system4_rate(),
        flags: Flags { chemistry: true, mass_action: true, full_domain: false, bounded_time: false },
        conservation: vec![ConservationLaw::MinusLn { value: sp("X_n"), log_of: sp("Y") }],
    }
    .build()
}

/// System 4: Systems 4p and 4n side by side, dual-rail output.
pub fn mk_log_system4() -> ModuleSpec {
    let mut o = ode(&["A", "X_n", "X_p", "Y", "Z"]);
    add_system3_terms(&mut o, "Z", "X_p");
    add_system4n_terms(&mut o, "Y", "X_n");
    Leaf {
        kind: ModuleKind::LogSystem4,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", dual("X_p", "X_n"))],
        init: vec![
            InitRule::fixed(sp("Z"), E),
            InitRule::derived_log(sp("X_p"), sp("Z")),
            InitRule::fixed(sp("Y"), E),
            InitRule::derived_log(sp("X_n"), sp("Y")),
        ],
        domain: Domain::of(&[("a", Bound::Positive)]),
        rate: system4_rate(),
        flags: Flags { chemistry: true, mass_action: true, full_domain: true, bounded_time: false },
        conservation: vec![
            ConservationLaw::MinusLn { value: sp("X_p"), log_of: sp("Z") },
            ConservationLaw::MinusLn { value: sp("X_n"), log_of: sp("Y") },
        ],
    }
    .build()
}

fn const_e_into(asm: &mut Assembly, mode: ConstEMode) -> Rails {
    match mode {
        ConstEMode::Static => Rails::Single(asm.constant("E", E).unwrap()),
        ConstEMode::Synthesized => {
            let one = asm.constant("ONE_E", 1.0).unwrap();
            let o = asm.instantiate("e", &mk_exp_nonneg(), &[("a", Rails::Single(one))]).unwrap();
            out(&o)
        }
    }
}

/// The constant `e`, either as a static species or synthesized by the
/// exponential module with input 1.
pub fn mk_const_e(mode: ConstEMode) -> ModuleSpec {
    let mut asm = Assembly::new();
    let e = const_e_into(&mut asm, mode);
    composite(
        ModuleKind::ConstE,
        asm,
        vec![Port::output("out", e)],
        Domain::default(),
        match mode {
            ConstEMode::Static => RateGuarantee::at_least(RateExpr::Const(f64::INFINITY)),
            ConstEMode::Synthesized => RateGuarantee::at_least(RateExpr::Const(1.0)),
        },
        Flags::ALL,
    )
}

fn shifted_log_rate() -> RateGuarantee {
    RateGuarantee::at_least(RateExpr::capped(RateExpr::e())).with_certified(RateExpr::capped(RateExpr::Const(1.0)))
}

/// System 5: multiply by `e`, take the System 3 logarithm (its input now
/// stays near or above `e`), subtract 1. The subtraction is carried by the
/// dual-rail output `(L, 1)`, which avoids a rectified subtraction pinned at
/// a tie when `a* = 1`.
pub fn mk_log_system5(mode: ConstEMode) -> ModuleSpec {
    let mut asm = Assembly::new();
    let a = Rails::Single(asm.input("A").unwrap());
    let e = const_e_into(&mut asm, mode);
    let one = asm.constant("ONE", 1.0).unwrap();
    let scaled = asm.instantiate("scale", &mk_mul(), &[("a", e), ("b", a)]).unwrap();
    let log = asm.instantiate("log", &mk_log_system3(), &[("a", out(&scaled))]).unwrap();
    let Rails::Single(l) = out(&log) else { unreachable!("System 3 output is single-rail") };
    composite(
        ModuleKind::LogSystem5,
        asm,
        vec![Port::input("a", single("A")), Port::output("out", Rails::Dual { pos: l, neg: one })],
        Domain::of(&[("a", Bound::AtLeast(1.0))]),
        shifted_log_rate(),
        Flags { chemistry: true, mass_action: true, full_domain: false, bounded_time: true },
    )
}

/// System 6: reciprocal, scale both components by `e`, clamp each below at
/// `e`, take the System 3 logarithm of each. The rails are
/// `(1 + ln a*, 1)` for `a* >= 1` and `(1, 1 - ln a*)` otherwise; the common
/// offset 1 cancels in the dual-rail value, which is how the final
/// subtraction of 1 is realized.
pub fn mk_log_system6(mode: ConstEMode) -> ModuleSpec {
    let mut asm = Assembly::new();
    let a = Rails::Single(asm.input("A").unwrap());
    let e = const_e_into(&mut asm, mode);
    // e/a in one stage; a reciprocal followed by a product adds a t^2 e^-t
    // tail on the negative rail.
    let sp_ = asm.instantiate("scale_p", &mk_mul(), &[("a", e.clone()), ("b", a.clone())]).unwrap();
    let sn = asm.instantiate("scale_n", &mk_divide(), &[("a", e.clone()), ("b", a)]).unwrap();
    let mp = asm.instantiate("clamp_p", &mk_max(), &[("a", out(&sp_)), ("b", e.clone())]).unwrap();
    let mn = asm.instantiate("clamp_n", &mk_max(), &[("a", out(&sn)), ("b", e)]).unwrap();
    let lp = asm.instantiate("log_p", &mk_log_system3(), &[("a", out(&mp))]).unwrap();
    let ln = asm.instantiate("log_n", &mk_log_system3(), &[("a", out(&mn))]).unwrap();
    let (Rails::Single(pos), Rails::Single(neg)) = (out(&lp), out(&ln)) else {
        unreachable!("System 3 output is single-rail")
    };
    composite(
        ModuleKind::LogSystem6,
        asm,
        vec![Port::input("a", single("A")), Port::output("out", Rails::Dual { pos, neg })],
        Domain::of(&[("a", Bound::Positive)]),
        shifted_log_rate(),
        Flags::ALL,
    )
}

/// `0 -> X`, `A + X -> A`: `dx/dt = 1 - a x`, converging to `1/a` at rate
/// exactly `a`.
pub fn mk_counterexample() -> ModuleSpec {
    let mut o = ode(&["A", "X"]);
    o.term("X", 1.0, &[]);
    o.term("X", -1.0, &[("A", 1), ("X", 1)]);
    Leaf {
        kind: ModuleKind::Counterexample,
        ode: o,
        ports: vec![Port::input("a", single("A")), Port::output("out", single("X"))],
        init: vec![InitRule::free(sp("X"), 0.0)],
        domain: Domain::of(&[("a", Bound::Positive)]),
        rate: RateGuarantee::exactly(RateExpr::capped(RateExpr::limit("a"))),
        flags: Flags { chemistry: true, mass_action: true, full_domain: true, bounded_time: false },
        conservation: vec![],
    }
    .build()
}

/// Every factory with default parameters, for catalog export and tests.
pub fn catalog() -> Vec<ModuleSpec> {
    vec![
        mk_identity(),
        mk_add(),
        mk_mul(),
        mk_reciprocal(),
        mk_divide(),
        mk_mth_root(2).expect("valid order"),
        mk_rectified_sub(),
        mk_abs_diff(),
        mk_max(),
        mk_exp_nonneg(),
        mk_exp_real(),
        mk_log_system1(),
        mk_log_system1r(),
        mk_log_system2(),
        mk_log_system3(),
        mk_log_system4p(),
        mk_log_system4n(),
        mk_log_system4(),
        mk_log_system5(ConstEMode::Static),
        mk_log_system6(ConstEMode::Static),
        mk_const_e(ConstEMode::Static),
        mk_counterexample(),
    ]
}
