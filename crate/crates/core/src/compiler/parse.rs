//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := number | ident | '(' expr ')' | func '(' args ')'
//! ```
//!
//! Functions: `exp(x)`, `ln(x)`, `root(x, m)`, `max(x, y)`, `absdiff(x, y)`.

use std::f64::consts::E;
use std::fmt;

use super::Expr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    /// Byte offset into the input.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at byte {}: expected ", self.offset)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

const FUNCTIONS: [&str; 5] = ["exp", "ln", "root", "max", "absdiff"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| SyntaxError {
                offset: start,
                expected: vec!["number".into()],
                found: format!("`{s}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if b"+-*/(),".contains(&c) {
            out.push((i, Tok::Sym(c as char)));
            i += 1;
        } else {
            let ch = text[i..].chars().next().expect("in bounds");
            return Err(SyntaxError {
                offset: i,
                expected: vec!["number".into(), "identifier".into(), "operator".into()],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SyntaxError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.factor()
        }
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Lit(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if FUNCTIONS.contains(&name.as_str()) {
                    self.call(&name)
                } else if *self.peek() == Tok::Sym('(') {
                    self.pos -= 1;
                    Err(self.error(&FUNCTIONS))
                } else if name == "e" {
                    Ok(Expr::Lit(E))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn call(&mut self, name: &str) -> Result<Expr, SyntaxError> {
        self.expect('(')?;
        let a = Box::new(self.expr()?);
        let e = match name {
            "exp" => Expr::Exp(a),
            "ln" => Expr::Ln(a),
            "root" => {
                self.expect(',')?;
                let m = match self.peek() {
                    Tok::Num(v) if v.fract() == 0.0 && *v >= 1.0 && *v <= u32::MAX as f64 => *v as u32,
                    _ => return Err(self.error(&["positive integer root order"])),
                };
                self.pos += 1;
                Expr::Root(a, m)
            }
            _ => {
                self.expect(',')?;
                let b = Box::new(self.expr()?);
                if name == "max" {
                    Expr::Max(a, b)
                } else {
                    Expr::AbsDiff(a, b)
                }
            }
        };
        self.expect(')')?;
        Ok(e)
    }
}

pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Box<Expr> {
        Box::new(Expr::var(n))
    }

    #[test]
    fn composite_example() {
        assert_eq!(parse("exp(a) * ln(b)").unwrap(), Expr::Mul(Box::new(Expr::Exp(v("a"))), Box::new(Expr::Ln(v("b")))));
        assert_eq!(parse("a").unwrap(), Expr::var("a"));
        assert_eq!(
            parse("root(x, 3) + max(y, 2.5)").unwrap(),
            Expr::Add(Box::new(Expr::Root(v("x"), 3)), Box::new(Expr::Max(v("y"), Box::new(Expr::Lit(2.5)))))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("a - b - c").unwrap().to_string(), "a - b - c");
        assert_eq!(parse("a - (b - c)").unwrap().to_string(), "a - (b - c)");
        assert_eq!(parse("a / b * c").unwrap(), Expr::Mul(Box::new(Expr::Div(v("a"), v("b"))), v("c")));
        assert_eq!(parse("-a*b").unwrap(), Expr::Mul(Box::new(Expr::Neg(v("a"))), v("b")));
        assert_eq!(parse("2*e").unwrap(), Expr::Mul(Box::new(Expr::Lit(2.0)), Box::new(Expr::Lit(E))));
        assert_eq!(parse("1e-3").unwrap(), Expr::Lit(1e-3));
        assert_eq!(parse(" ( a ) ").unwrap(), Expr::var("a"));
    }

    #[test]
    fn errors_point_at_offending_byte() {
        let err = parse("a + * b").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.expected.contains(&"number".to_string()));
        assert_eq!(parse("ln(a").unwrap_err().offset, 4);
        assert_eq!(parse("foo(a)").unwrap_err().offset, 0);
        assert_eq!(parse("root(a, 0)").unwrap_err().offset, 8);
        assert_eq!(parse("a b").unwrap_err().offset, 2);
        assert_eq!(parse("a $").unwrap_err().offset, 2);
        assert_eq!(parse("").unwrap_err().found, "end of input");
    }
}
