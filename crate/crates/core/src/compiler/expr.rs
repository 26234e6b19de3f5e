use std::f64::consts::E;
use std::fmt;

/// Expression tree. The identifier `e` is the literal `Lit(e)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(f64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Root(Box<Expr>, u32),
    Max(Box<Expr>, Box<Expr>),
    AbsDiff(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Var(_) => vec![],
            Expr::Neg(a) | Expr::Exp(a) | Expr::Ln(a) | Expr::Root(a, _) => vec![a],
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Max(a, b)
            | Expr::AbsDiff(a, b) => vec![a, b],
        }
    }

    /// Free variables in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        if let Expr::Var(v) = self {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    /// Direct evaluation; `None` for an unbound variable.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        Some(match self {
            Expr::Lit(v) => *v,
            Expr::Var(n) => env(n)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => a.eval(env)? / b.eval(env)?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Exp(a) => a.eval(env)?.exp(),
            Expr::Ln(a) => a.eval(env)?.ln(),
            Expr::Root(a, m) => a.eval(env)?.powf(1.0 / *m as f64),
            Expr::Max(a, b) => a.eval(env)?.max(b.eval(env)?),
            Expr::AbsDiff(a, b) => (a.eval(env)? - b.eval(env)?).abs(),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) if *v == E => f.write_str("e"),
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { " * " } else { " / " })?;
                wrap(f, b, 3)
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, 3)
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Root(a, m) => write!(f, "root({a}, {m})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::AbsDiff(a, b) => write!(f, "absdiff({a}, {b})"),
        }
    }
}
