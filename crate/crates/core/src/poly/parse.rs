//! Polynomial expression parser with exact rational literals.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' integer)?
//! atom    := number | name | '(' sum ')'
//! ```
//!
//! Numbers are integers or decimals (`0.1` is read as exactly `1/10`);
//! `p/q` is an ordinary division by a constant. Division by anything
//! that is not a nonzero constant is rejected.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::coeff::{Coeff, Rational};
use super::multi::MultiPoly;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Name(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push((start, Tok::Num(decimal(&text, start)?)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Name(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Input(format!("unexpected character '{c}' at column {}", i + 1)));
        }
    }
    Ok(out)
}

fn decimal(text: &str, pos: usize) -> Result<Rational> {
    let bad = || Error::Input(format!("malformed number '{text}' at column {}", pos + 1));
    let mut parts = text.split('.');
    let int_part = parts.next().unwrap_or("");
    let frac = parts.next().unwrap_or("");
    if parts.next().is_some() || (int_part.is_empty() && frac.is_empty()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(Rational::new(num, den))
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| c + 1).unwrap_or(0)
    }

    fn sum(&mut self) -> Result<MultiPoly<Rational>> {
        let mut acc = self.product()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if op == '+' { acc.plus(&rhs) } else { acc.minus(&rhs) };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<MultiPoly<Rational>> {
        let mut acc = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            let col = self.column();
            self.pos += 1;
            let rhs = self.unary()?;
            if op == '*' {
                acc = acc.times(&rhs);
            } else {
                let c = rhs.constant_term();
                if rhs.len() != 1 || Zero::is_zero(&c) {
                    return Err(Error::Input(format!(
                        "division at column {col} must be by a nonzero constant"
                    )));
                }
                acc = acc.scale(&(<Rational as One>::one() / c));
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<MultiPoly<Rational>> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(self.unary()?.negated())
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<MultiPoly<Rational>> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let col = self.column();
            match self.peek().cloned() {
                Some(Tok::Num(n)) if n.is_integer() && n >= <Rational as Zero>::zero() => {
                    self.pos += 1;
                    let k: u32 = n
                        .to_integer()
                        .try_into()
                        .map_err(|_| Error::Input(format!("exponent too large at column {col}")))?;
                    Ok(super::coeff::pow(&base, k))
                }
                _ => Err(Error::Input(format!(
                    "expected a nonnegative integer exponent at column {col}"
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<MultiPoly<Rational>> {
        let col = self.column();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(MultiPoly::constant(n))
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(MultiPoly::var(i)),
                    None => Err(Error::Input(format!(
                        "unknown name '{name}' at column {col} (declared: {})",
                        self.vars.join(", ")
                    ))),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.sum()?;
                match self.peek() {
                    Some(Tok::Op(')')) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::Input(format!("missing ')' for '(' at column {col}"))),
                }
            }
            Some(t) => Err(Error::Input(format!("unexpected {t:?} at column {col}"))),
            None => Err(Error::Input("unexpected end of expression".into())),
        }
    }
}

/// Parses `src` as a polynomial in the variables `vars` (variable `i` of the
/// result is `vars[i]`).
pub fn parse_multi(src: &str, vars: &[&str]) -> Result<MultiPoly<Rational>> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(Error::Input("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0, vars };
    let out = p.sum()?;
    if p.pos != p.toks.len() {
        return Err(Error::Input(format!("trailing input at column {}", p.column())));
    }
    Ok(out)
}

/// Parses an exact rational literal such as `3`, `-1/10` or `0.25`.
pub fn parse_rational(src: &str) -> Result<Rational> {
    let p = parse_multi(src, &[])?;
    if p.len() > 1 {
        return Err(Error::Input(format!("'{src}' is not a constant")));
    }
    Ok(p.constant_term())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::coeff::ratio;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("-3/4").unwrap(), ratio(-3, 4));
        assert_eq!(parse_rational("1/10 + 2").unwrap(), ratio(21, 10));
    }

    #[test]
    fn precedence_and_powers() {
        let p = parse_multi("2*a^2 - (a - b)^2", &["a", "b"]).unwrap();
        // a^2 + 2ab - b^2
        assert_eq!(p.eval(&[crate::poly::int(3), crate::poly::int(1)]), crate::poly::int(14));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_multi("a/b", &["a", "b"]).is_err());
        assert!(parse_multi("a/0", &["a"]).is_err());
        assert!(parse_multi("a^-1", &["a"]).is_err());
        assert!(parse_multi("c", &["a"]).is_err());
        assert!(parse_multi("(a", &["a"]).is_err());
        assert!(parse_multi("", &["a"]).is_err());
        assert!(parse_multi("1.2.3", &[]).is_err());
    }
}
