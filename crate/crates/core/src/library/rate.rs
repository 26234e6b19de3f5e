use std::fmt;

/// Symbolic convergence-rate formula over the input rate `ρ_in`, input
/// limits and constants.
#[derive(Clone, Debug, PartialEq)]
pub enum RateExpr {
    InputRate,
    Const(f64),
    /// Named constant such as `e`; printed by name.
    Named(&'static str, f64),
    /// Limit of the named input port.
    Limit(String),
    Mul(Box<RateExpr>, Box<RateExpr>),
    Sub(Box<RateExpr>, Box<RateExpr>),
    Ln(Box<RateExpr>),
    Abs(Box<RateExpr>),
    Max(Vec<RateExpr>),
    Min(Vec<RateExpr>),
}

impl RateExpr {
    pub fn limit(port: &str) -> Self {
        RateExpr::Limit(port.to_string())
    }

    pub fn e() -> Self {
        RateExpr::Named("e", std::f64::consts::E)
    }

    /// `min{ρ_in, other}`.
    pub fn capped(other: RateExpr) -> Self {
        RateExpr::Min(vec![RateExpr::InputRate, other])
    }

    pub fn mul(a: RateExpr, b: RateExpr) -> Self {
        RateExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn sub(a: RateExpr, b: RateExpr) -> Self {
        RateExpr::Sub(Box::new(a), Box::new(b))
    }

    /// `|a* - b*|`.
    pub fn gap(a: &str, b: &str) -> Self {
        RateExpr::Abs(Box::new(RateExpr::sub(RateExpr::limit(a), RateExpr::limit(b))))
    }

    pub fn ln(a: RateExpr) -> Self {
        RateExpr::Ln(Box::new(a))
    }

    pub fn eval(&self, input_rate: f64, limit: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            RateExpr::InputRate => input_rate,
            RateExpr::Const(c) | RateExpr::Named(_, c) => *c,
            RateExpr::Limit(p) => limit(p),
            RateExpr::Mul(a, b) => a.eval(input_rate, limit) * b.eval(input_rate, limit),
            RateExpr::Sub(a, b) => a.eval(input_rate, limit) - b.eval(input_rate, limit),
            RateExpr::Ln(a) => a.eval(input_rate, limit).ln(),
            RateExpr::Abs(a) => a.eval(input_rate, limit).abs(),
            RateExpr::Max(v) => v.iter().map(|e| e.eval(input_rate, limit)).fold(f64::NEG_INFINITY, f64::max),
            RateExpr::Min(v) => v.iter().map(|e| e.eval(input_rate, limit)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn mentions_limits(&self) -> bool {
        match self {
            RateExpr::Limit(_) => true,
            RateExpr::Mul(a, b) | RateExpr::Sub(a, b) => a.mentions_limits() || b.mentions_limits(),
            RateExpr::Ln(a) | RateExpr::Abs(a) => a.mentions_limits(),
            RateExpr::Max(v) | RateExpr::Min(v) => v.iter().any(RateExpr::mentions_limits),
            _ => false,
        }
    }
}

impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, v: &[RateExpr]| {
            let parts: Vec<String> = v.iter().map(|e| e.to_string()).collect();
            write!(f, "{name}{{{}}}", parts.join(", "))
        };
        match self {
            RateExpr::InputRate => f.write_str("ρ_in"),
            RateExpr::Const(c) => write!(f, "{c}"),
            RateExpr::Named(n, _) => f.write_str(n),
            RateExpr::Limit(p) => write!(f, "{p}*"),
            RateExpr::Mul(a, b) => write!(f, "{a}·{b}"),
            RateExpr::Sub(a, b) => write!(f, "{a} - {b}"),
            RateExpr::Ln(a) => write!(f, "ln({a})"),
            RateExpr::Abs(a) => write!(f, "|{a}|"),
            RateExpr::Max(v) => list(f, "max", v),
            RateExpr::Min(v) => list(f, "min", v),
        }
    }
}

/// Rate formula attached to a module. `certified`, when present, is the
/// weaker bound actually checked; `exact` marks formulas that hold with
/// equality for constant inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RateGuarantee {
    pub formula: RateExpr,
    pub exact: bool,
    pub certified: Option<RateExpr>,
}

impl RateGuarantee {
    pub fn at_least(formula: RateExpr) -> Self {
        RateGuarantee { formula, exact: false, certified: None }
    }

    pub fn exactly(formula: RateExpr) -> Self {
        RateGuarantee { formula, exact: true, certified: None }
    }

    /// `min{ρ_in, 1}`, the guarantee of every arithmetic module.
    pub fn unit() -> Self {
        Self::at_least(RateExpr::capped(RateExpr::Const(1.0)))
    }

    pub fn with_certified(mut self, certified: RateExpr) -> Self {
        self.certified = Some(certified);
        self
    }

    /// The bound used for checks and predictions.
    pub fn checked(&self) -> &RateExpr {
        self.certified.as_ref().unwrap_or(&self.formula)
    }

    /// Worst case of the checked bound when every input limit lies in
    /// `[lo, hi]`. Rate formulas here are built from `x`, `ln x`, `|ln x|` and
    /// `|x - y|`, so endpoints, `x = 1` and the other ports' endpoints (ties)
    /// cover every minimum.
    pub fn worst_case(&self, input_rate: f64, range: &dyn Fn(&str) -> (f64, f64)) -> f64 {
        let expr = self.checked();
        if !expr.mentions_limits() {
            return expr.eval(input_rate, &|_| f64::NAN);
        }
        let mut ports = Vec::new();
        collect_ports(expr, &mut ports);
        let ranges: Vec<(f64, f64)> = ports.iter().map(|p| range(p)).collect();
        let ends: Vec<f64> = ranges.iter().flat_map(|&(lo, hi)| [lo, hi]).filter(|v| v.is_finite()).collect();
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for &(lo, hi) in &ranges {
            let mut pts = vec![lo];
            for v in ends.iter().copied().chain([1.0, hi]) {
                if v.is_finite() && v >= lo && v <= hi && !pts.contains(&v) {
                    pts.push(v);
                }
            }
            candidates.push(pts);
        }
        let mut worst = f64::INFINITY;
        let mut idx = vec![0usize; ports.len()];
        loop {
            let lookup = |name: &str| {
                let k = ports.iter().position(|p| p == name).expect("collected port");
                candidates[k][idx[k]]
            };
            let v = expr.eval(input_rate, &lookup);
            worst = worst.min(if v.is_nan() { 0.0 } else { v });
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return worst.max(0.0);
                }
                idx[k] += 1;
                if idx[k] < candidates[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

fn collect_ports(e: &RateExpr, out: &mut Vec<String>) {
    match e {
        RateExpr::Limit(p) => {
            if !out.contains(p) {
                out.push(p.clone())
            }
        }
        RateExpr::Mul(a, b) | RateExpr::Sub(a, b) => {
            collect_ports(a, out);
            collect_ports(b, out);
        }
        RateExpr::Ln(a) | RateExpr::Abs(a) => collect_ports(a, out),
        RateExpr::Max(v) | RateExpr::Min(v) => v.iter().for_each(|x| collect_ports(x, out)),
        _ => {}
    }
}

impl fmt::Display for RateGuarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact {
            write!(f, "exactly {}", self.formula)
        } else {
            write!(f, "at least {}", self.formula)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_eval() {
        let r = RateExpr::capped(RateExpr::mul(RateExpr::limit("a"), RateExpr::ln(RateExpr::limit("a"))));
        assert_eq!(r.to_string(), "min{ρ_in, a*·ln(a*)}");
        let v = r.eval(f64::INFINITY, &|_| std::f64::consts::E);
        assert!((v - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(RateGuarantee::unit().to_string(), "at least min{ρ_in, 1}");
    }

    #[test]
    fn worst_case_over_ranges() {
        let g = RateGuarantee::at_least(RateExpr::capped(RateExpr::limit("a")));
        assert_eq!(g.worst_case(f64::INFINITY, &|_| (0.25, 4.0)), 0.25);
        assert_eq!(g.worst_case(0.5, &|_| (2.0, 4.0)), 0.5);
        let log4 = RateGuarantee::at_least(RateExpr::capped(RateExpr::Abs(Box::new(RateExpr::ln(RateExpr::limit("a"))))));
        assert_eq!(log4.worst_case(f64::INFINITY, &|_| (0.5, 2.0)), 0.0);
        assert_eq!(RateGuarantee::unit().worst_case(f64::INFINITY, &|_| (0.0, 1.0)), 1.0);
        let gap = RateGuarantee::at_least(RateExpr::capped(RateExpr::gap("a", "b")));
        let disjoint = |p: &str| if p == "a" { (3.0, 4.0) } else { (0.0, 1.0) };
        assert_eq!(gap.worst_case(f64::INFINITY, &disjoint), 2.0);
        let overlap = |p: &str| if p == "a" { (3.0, 4.0) } else { (0.0, 3.5) };
        assert_eq!(gap.worst_case(f64::INFINITY, &overlap), 0.0);
    }
}
