//! Sign and range inference. Each node is tagged `NonNeg` (one species
//! suffices) or `Real` (needs a dual-rail pair), together with an interval
//! bounding its limit.

use std::collections::BTreeMap;
use std::fmt;

use super::{CompileError, Expr};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignTag {
    NonNeg,
    Real,
}

/// Closed interval, possibly unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const NONNEG: Interval = Interval { lo: 0.0, hi: f64::INFINITY };
    pub const REAL: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }

    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }

    fn mul(self, o: Interval) -> Interval {
        let p = |x: f64, y: f64| if x == 0.0 || y == 0.0 { 0.0 } else { x * y };
        let c = [p(self.lo, o.lo), p(self.lo, o.hi), p(self.hi, o.lo), p(self.hi, o.hi)];
        Interval::new(c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    fn map_monotone(self, f: impl Fn(f64) -> f64) -> Interval {
        Interval::new(f(self.lo), f(self.hi))
    }

    /// Nonnegative part, the range of the positive rail.
    pub fn pos_part(self) -> Interval {
        Interval::new(self.lo.max(0.0), self.hi.max(0.0))
    }

    /// Range of the negative rail.
    pub fn neg_part(self) -> Interval {
        self.neg().pos_part()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Declaration of one input variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decl {
    pub sign: SignTag,
    pub range: Interval,
}

/// Input declarations: `name:real`, `name:real(lo,hi)`, `name:nonneg`,
/// `name:nonneg(lo,hi)`, `name:pos`. Undeclared variables are `nonneg`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Decls(pub BTreeMap<String, Decl>);

impl Decls {
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Decls, CompileError> {
        let mut out = Decls::default();
        for item in items {
            let (name, decl) = parse_decl(item.as_ref())?;
            out.0.insert(name, decl);
        }
        Ok(out)
    }

    pub fn insert(&mut self, name: &str, decl: Decl) {
        self.0.insert(name.to_string(), decl);
    }

    pub fn get(&self, name: &str) -> Decl {
        self.0.get(name).copied().unwrap_or(Decl { sign: SignTag::NonNeg, range: Interval::NONNEG })
    }
}

fn parse_decl(text: &str) -> Result<(String, Decl), CompileError> {
    let bad = |why: &str| CompileError::Decl(format!("`{text}`: {why}"));
    let (name, kind) = text.split_once(':').ok_or_else(|| bad("expected `name:kind`"))?;
    let name = name.trim();
    if name.is_empty() || name == "e" || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(bad("invalid variable name"));
    }
    let kind = kind.trim();
    let (head, range) = match kind.split_once('(') {
        Some((head, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| bad("missing `)`"))?;
            let (lo, hi) = inner.split_once(',').ok_or_else(|| bad("expected `(lo,hi)`"))?;
            let num = |s: &str| -> Result<f64, CompileError> {
                match s.trim() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    t => t.parse::<f64>().map_err(|_| bad("bad bound")),
                }
            };
            let r = Interval::new(num(lo)?, num(hi)?);
            if r.lo.is_nan() || r.hi.is_nan() || r.lo > r.hi {
                return Err(bad("empty range"));
            }
            (head.trim(), Some(r))
        }
        None => (kind, None),
    };
    let decl = match head {
        "real" => Decl { sign: SignTag::Real, range: range.unwrap_or(Interval::REAL) },
        "nonneg" => {
            let r = range.unwrap_or(Interval::NONNEG);
            if r.lo < 0.0 {
                return Err(bad("nonneg range must start at or above 0"));
            }
            Decl { sign: SignTag::NonNeg, range: r }
        }
        "pos" if range.is_none() => {
            Decl { sign: SignTag::NonNeg, range: Interval::new(f64::MIN_POSITIVE, f64::INFINITY) }
        }
        _ => return Err(bad("kind must be real, nonneg or pos")),
    };
    Ok((name.to_string(), decl))
}

/// Expression node annotated with its sign tag and limit range.
#[derive(Clone, Debug, PartialEq)]
pub struct Signed {
    pub expr: Expr,
    pub sign: SignTag,
    pub range: Interval,
    pub children: Vec<Signed>,
}

fn domain(msg: String) -> CompileError {
    CompileError::Domain(msg)
}

fn positive(node: &Signed, what: &str) -> Result<(), CompileError> {
    if node.sign == SignTag::Real {
        return Err(domain(format!("{what} needs a nonnegative argument, but `{}` may be negative", node.expr)));
    }
    if node.range.lo <= 0.0 {
        return Err(domain(format!(
            "{what} needs a positive argument, but `{}` ranges over {}",
            node.expr, node.range
        )));
    }
    Ok(())
}

fn nonneg(node: &Signed, what: &str) -> Result<(), CompileError> {
    if node.sign == SignTag::Real {
        return Err(domain(format!("{what} needs nonnegative arguments, but `{}` may be negative", node.expr)));
    }
    Ok(())
}

pub fn infer_signs(e: &Expr, decls: &Decls) -> Result<Signed, CompileError> {
    let children: Vec<Signed> = e.children().into_iter().map(|c| infer_signs(c, decls)).collect::<Result<_, _>>()?;
    let both_nonneg = children.iter().all(|c| c.sign == SignTag::NonNeg);
    let join = if both_nonneg { SignTag::NonNeg } else { SignTag::Real };
    let (sign, range) = match e {
        Expr::Lit(v) => {
            if !v.is_finite() {
                return Err(domain(format!("literal {v} is not finite")));
            }
            (SignTag::NonNeg, Interval::point(*v))
        }
        Expr::Var(name) => {
            let d = decls.get(name);
            (d.sign, d.range)
        }
        Expr::Add(..) => (join, children[0].range.add(children[1].range)),
        Expr::Sub(..) => (SignTag::Real, children[0].range.add(children[1].range.neg())),
        Expr::Neg(_) => (SignTag::Real, children[0].range.neg()),
        Expr::Mul(..) => (join, children[0].range.mul(children[1].range)),
        Expr::Div(..) => {
            positive(&children[1], "division")?;
            let d = &children[1].range;
            let inv = Interval::new(1.0 / d.hi, 1.0 / d.lo);
            (children[0].sign, children[0].range.mul(inv))
        }
        Expr::Exp(_) => (SignTag::NonNeg, children[0].range.map_monotone(f64::exp)),
        Expr::Ln(_) => {
            positive(&children[0], "ln")?;
            (SignTag::Real, children[0].range.map_monotone(f64::ln))
        }
        Expr::Root(_, m) => {
            positive(&children[0], "root")?;
            let p = 1.0 / *m as f64;
            (SignTag::NonNeg, children[0].range.map_monotone(|x| x.powf(p)))
        }
        Expr::Max(..) => {
            nonneg(&children[0], "max")?;
            nonneg(&children[1], "max")?;
            let (a, b) = (children[0].range, children[1].range);
            (SignTag::NonNeg, Interval::new(a.lo.max(b.lo), a.hi.max(b.hi)))
        }
        Expr::AbsDiff(..) => {
            nonneg(&children[0], "absdiff")?;
            nonneg(&children[1], "absdiff")?;
            let d = children[0].range.add(children[1].range.neg());
            let lo = if d.contains(0.0) { 0.0 } else { d.lo.abs().min(d.hi.abs()) };
            (SignTag::NonNeg, Interval::new(lo, d.lo.abs().max(d.hi.abs())))
        }
    };
    Ok(Signed { expr: e.clone(), sign, range, children })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::parse;

    fn tag(text: &str, decls: &[&str]) -> Result<Signed, CompileError> {
        infer_signs(&parse(text).unwrap(), &Decls::parse(decls).unwrap())
    }

    #[test]
    fn sign_rules() {
        assert_eq!(tag("exp(a)", &["a:real"]).unwrap().sign, SignTag::NonNeg);
        assert_eq!(tag("ln(b)", &["b:nonneg(0.1,100)"]).unwrap().sign, SignTag::Real);
        assert_eq!(tag("a - b", &[]).unwrap().sign, SignTag::Real);
        assert_eq!(tag("a * b + 2", &[]).unwrap().sign, SignTag::NonNeg);
        assert_eq!(tag("a * b", &["a:real"]).unwrap().sign, SignTag::Real);
        assert_eq!(tag("-a", &[]).unwrap().sign, SignTag::Real);
    }

    #[test]
    fn ranges_propagate() {
        let s = tag("e * b", &["b:nonneg(1,10)"]).unwrap();
        assert!((s.range.lo - std::f64::consts::E).abs() < 1e-15);
        let s = tag("1 / b", &["b:nonneg(0.5,4)"]).unwrap();
        assert_eq!(s.range, Interval::new(0.25, 2.0));
        let s = tag("absdiff(a, b)", &["a:nonneg(3,4)", "b:nonneg(0,1)"]).unwrap();
        assert_eq!(s.range, Interval::new(2.0, 4.0));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(tag("ln(a)", &["a:real"]), Err(CompileError::Domain(_))));
        assert!(matches!(tag("ln(a)", &[]), Err(CompileError::Domain(_))));
        assert!(tag("ln(a)", &["a:pos"]).is_ok());
        assert!(matches!(tag("1 / a", &["a:nonneg(0,1)"]), Err(CompileError::Domain(_))));
        assert!(matches!(tag("root(a - 1, 2)", &[]), Err(CompileError::Domain(_))));
        assert!(matches!(tag("max(a, b)", &["a:real"]), Err(CompileError::Domain(_))));
    }

    #[test]
    fn decl_syntax() {
        let d = Decls::parse(&["a:real", "b:nonneg(0.1, 100)", "c:real(-2,inf)"]).unwrap();
        assert_eq!(d.get("a").sign, SignTag::Real);
        assert_eq!(d.get("b").range, Interval::new(0.1, 100.0));
        assert_eq!(d.get("c").range.hi, f64::INFINITY);
        assert_eq!(d.get("zz").range, Interval::NONNEG);
        for bad in ["a", "a:int", "a:nonneg(-1,2)", "a:nonneg(3,2)", "e:real", "a:nonneg(1,2"] {
            assert!(Decls::parse(&[bad]).is_err(), "{bad}");
        }
    }
}
