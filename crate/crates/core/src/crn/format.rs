//! Plain-text formats.
//!
//! Network: one reaction per line, `X + Y -> X + Y + Z ; k=1`, `0` for the
//! empty complex, `#` comments. Species are declared by appearance; species
//! that take part in no reaction are listed on a `species: A B` line.
//!
//! ODE: one equation per line, `X' = A*X - X*Z^2`, `0` for an empty
//! right-hand side. Every variable gets a line, so the variable order is
//! preserved.

use std::collections::BTreeMap;

use super::{Complex, CrnError, Monomial, PolynomialOde, Reaction, ReactionNetwork, SpeciesId};

pub fn write_network(net: &ReactionNetwork, title: &str) -> String {
    let mut out = format!("# crncalc network: {title}\n");
    let inert: Vec<&str> = net
        .species()
        .iter()
        .filter(|s| !net.reactions().iter().any(|r| r.reactant.coefficient(s) + r.product.coefficient(s) > 0))
        .map(SpeciesId::as_str)
        .collect();
    if !inert.is_empty() {
        out.push_str(&format!("species: {}\n", inert.join(" ")));
    }
    for r in net.reactions() {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

fn syntax(line: usize, message: impl Into<String>) -> CrnError {
    CrnError::Syntax { line, message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_complex(text: &str, line: usize) -> Result<Complex, CrnError> {
    let text = text.trim();
    if text == "0" || text == "∅" {
        return Ok(Complex::empty());
    }
    let mut terms = Vec::new();
    for part in text.split('+') {
        let part = part.trim();
        let digits = part.chars().take_while(|c| c.is_ascii_digit()).count();
        let (coef, name) = part.split_at(digits);
        let coef: u32 = if coef.is_empty() {
            1
        } else {
            coef.parse().map_err(|_| syntax(line, format!("bad coefficient in `{part}`")))?
        };
        let name = name.trim();
        let s = SpeciesId::new(name).map_err(|_| syntax(line, format!("bad species `{name}`")))?;
        terms.push((s, coef));
    }
    Complex::new(terms).map_err(|e| syntax(line, e.to_string()))
}

pub fn parse_network(text: &str) -> Result<ReactionNetwork, CrnError> {
    let mut reactions = Vec::new();
    let mut declared = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(names) = line.strip_prefix("species:") {
            for name in names.split_whitespace() {
                declared.push(SpeciesId::new(name).map_err(|_| syntax(line_no, format!("bad species `{name}`")))?);
            }
            continue;
        }
        let (body, k) = match line.split_once(';') {
            Some((body, rest)) => {
                let rest = rest.trim();
                let value = rest
                    .strip_prefix("k")
                    .map(str::trim_start)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| syntax(line_no, format!("expected `k=<rate>`, found `{rest}`")))?;
                let k: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| syntax(line_no, format!("bad rate constant `{}`", value.trim())))?;
                (body, k)
            }
            None => (line, 1.0),
        };
        let (lhs, rhs) = body
            .split_once("->")
            .ok_or_else(|| syntax(line_no, "expected `->`"))?;
        let reactant = parse_complex(lhs, line_no)?;
        let product = parse_complex(rhs, line_no)?;
        let r = Reaction::new(reactant, product, k).map_err(|e| syntax(line_no, e.to_string()))?;
        reactions.push(r);
    }
    let net = ReactionNetwork::from_reactions(reactions);
    let mut species = net.species().to_vec();
    for s in declared {
        if !species.contains(&s) {
            species.push(s);
        }
    }
    ReactionNetwork::new(species, net.reactions().to_vec())
}

pub fn write_ode(ode: &PolynomialOde, title: &str) -> String {
    let mut out = format!("# crncalc ode: {title}\n");
    for s in ode.variables() {
        out.push_str(&format!("{s}' = {}\n", ode.format_rhs(s)));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Star,
    Caret,
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, CrnError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && (b[j] as char).is_ascii_digit() {
                        i = j;
                        while i < b.len() && (b[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                out.push(Tok::Num(s.parse().map_err(|_| syntax(line, format!("bad number `{s}`")))?));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.') {
                    i += 1;
                }
                out.push(Tok::Name(text[start..i].to_string()));
            }
            other => return Err(syntax(line, format!("unexpected `{other}`"))),
        }
    }
    Ok(out)
}

fn parse_terms(text: &str, line: usize) -> Result<Vec<Monomial>, CrnError> {
    let toks = tokenize(text, line)?;
    if toks == [Tok::Num(0.0)] {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        match toks[i] {
            Tok::Plus => i += 1,
            Tok::Minus => {
                sign = -1.0;
                i += 1
            }
            _ if i == 0 => {}
            _ => return Err(syntax(line, "expected `+` or `-` between terms")),
        }
        let mut coefficient = sign;
        let mut powers: BTreeMap<SpeciesId, u32> = BTreeMap::new();
        let mut first = true;
        loop {
            if !first {
                if toks.get(i) != Some(&Tok::Star) {
                    break;
                }
                i += 1;
            }
            first = false;
            match toks.get(i) {
                Some(Tok::Num(v)) => {
                    coefficient *= v;
                    i += 1;
                }
                Some(Tok::Name(n)) => {
                    let s = SpeciesId::new(n.as_str()).map_err(|_| syntax(line, format!("bad species `{n}`")))?;
                    i += 1;
                    let mut p = 1;
                    if toks.get(i) == Some(&Tok::Caret) {
                        match toks.get(i + 1) {
                            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 1.0 => p = *v as u32,
                            _ => return Err(syntax(line, "exponent must be a positive integer")),
                        }
                        i += 2;
                    }
                    *powers.entry(s).or_insert(0) += p;
                }
                _ => return Err(syntax(line, "expected a number or species")),
            }
        }
        out.push(Monomial::new(coefficient, powers).map_err(|e| syntax(line, e.to_string()))?);
    }
    Ok(out)
}

pub fn parse_ode(text: &str) -> Result<PolynomialOde, CrnError> {
    let mut equations = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line.split_once('=').ok_or_else(|| syntax(line_no, "expected `=`"))?;
        let name = lhs
            .trim()
            .strip_suffix('\'')
            .ok_or_else(|| syntax(line_no, "left side must be `<species>'`"))?;
        let s = SpeciesId::new(name.trim()).map_err(|_| syntax(line_no, format!("bad species `{name}`")))?;
        equations.push((line_no, s, parse_terms(rhs, line_no)?));
    }
    let mut ode = PolynomialOde::new(equations.iter().map(|(_, s, _)| s.clone()).collect())?;
    for (line_no, s, terms) in equations {
        for m in terms {
            ode.add_term(&s, m).map_err(|e| syntax(line_no, e.to_string()))?;
        }
    }
    Ok(ode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::sp;

    const ADDITION: &str = "# crncalc network: addition\nX -> X + Z ; k=1\nY -> Y + Z ; k=1\nZ -> 0 ; k=1\n";

    #[test]
    fn addition_golden() {
        let net = parse_network(ADDITION).unwrap();
        assert_eq!(net.species(), &[sp("X"), sp("Z"), sp("Y")]);
        assert_eq!(write_network(&net, "addition"), ADDITION);
    }

    #[test]
    fn inert_species_survive() {
        let text = "# crncalc network: t\nspecies: ONE\nX -> 0 ; k=1\n";
        let net = parse_network(text).unwrap();
        assert_eq!(net.species(), &[sp("X"), sp("ONE")]);
        assert_eq!(write_network(&net, "t"), text);
        assert_eq!(net.derive_ode().rhs(&sp("ONE")).len(), 0);
    }

    #[test]
    fn comments_defaults_and_coefficients() {
        let text = "# system 3\nA + Z + X -> A + 2Z + X   # growth\n2 Z + X -> Z + X ; k = 1\n\nA+X->A+2X\nZ + X -> Z;k=2.5\n";
        let net = parse_network(text).unwrap();
        assert_eq!(net.reactions().len(), 4);
        assert_eq!(net.reactions()[1].reactant.coefficient(&sp("Z")), 2);
        assert_eq!(net.reactions()[3].rate_constant, 2.5);
        assert_eq!(net.reactions()[0].to_string(), "A + X + Z -> A + X + 2Z ; k=1");
    }

    #[test]
    fn network_syntax_errors_carry_line() {
        for (text, line) in [("X -> \n", 1), ("X -> Y\nX Y\n", 2), ("X -> Y ; q=1", 1), ("X -> X", 1), ("5X -> 0", 1)] {
            match parse_network(text) {
                Err(CrnError::Syntax { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn ode_round_trip() {
        let mut ode = PolynomialOde::new(vec![sp("A"), sp("X"), sp("Y"), sp("Z")]).unwrap();
        ode.term("X", 1.0, &[]);
        ode.term("X", -1.0, &[("Y", 1), ("Z", 1)]);
        ode.term("Y", 1.0, &[("Y", 1)]);
        ode.term("Y", -1.0, &[("A", 1), ("Y", 2)]);
        ode.term("Z", 0.000001, &[("Z", 1)]);
        ode.term("Z", -2.5, &[("Z", 3)]);
        let text = write_ode(&ode, "t");
        assert_eq!(
            text,
            "# crncalc ode: t\nA' = 0\nX' = 1 - Y*Z\nY' = -A*Y^2 + Y\nZ' = 0.000001*Z - 2.5*Z^3\n"
        );
        let back = parse_ode(&text).unwrap();
        assert_eq!(back, ode);
        assert!(parse_ode("X' = 1e-6*X - 3E2").is_ok());
        assert!(parse_ode("X = 1").is_err());
        assert!(parse_ode("X' = Y^0.5").is_err());
    }
}
