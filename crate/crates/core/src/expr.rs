// SPDX-License-Identifier: Apache-2.0

//! Boolean cell functions.
//!
//! Expressions are kept as binary trees over `!`, `&`, `|` and `^`, so every
//! n-input gate is already decomposed into 2-input operators.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! or   := xor ('|' xor)*
//! xor  := and ('^' and)*
//! and  := unary ('&' unary)*
//! unary:= ('!' | '~') unary | '(' or ')' | '0' | '1' | identifier
//! ```

use crate::logic::{Logic, Tern64};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(bool),
    /// Index into the owning kind's input pin list.
    Pin(usize),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at column {column}")]
pub struct ExprError {
    pub message: String,
    pub column: usize,
}

/// Expression with pin names not yet resolved to indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum RawExpr {
    Const(bool),
    Name(String),
    Not(Box<RawExpr>),
    And(Box<RawExpr>, Box<RawExpr>),
    Or(Box<RawExpr>, Box<RawExpr>),
    Xor(Box<RawExpr>, Box<RawExpr>),
}

impl RawExpr {
    /// Names in order of first appearance.
    pub(crate) fn names(&self, out: &mut Vec<String>) {
        match self {
            RawExpr::Const(_) => {}
            RawExpr::Name(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            RawExpr::Not(a) => a.names(out),
            RawExpr::And(a, b) | RawExpr::Or(a, b) | RawExpr::Xor(a, b) => {
                a.names(out);
                b.names(out);
            }
        }
    }

    /// Resolves names against `pins`; returns the first unknown name on failure.
    pub(crate) fn resolve(&self, pins: &[String]) -> Result<Expr, String> {
        Ok(match self {
            RawExpr::Const(b) => Expr::Const(*b),
            RawExpr::Name(n) => Expr::Pin(pins.iter().position(|p| p == n).ok_or_else(|| n.clone())?),
            RawExpr::Not(a) => Expr::Not(Box::new(a.resolve(pins)?)),
            RawExpr::And(a, b) => Expr::And(Box::new(a.resolve(pins)?), Box::new(b.resolve(pins)?)),
            RawExpr::Or(a, b) => Expr::Or(Box::new(a.resolve(pins)?), Box::new(b.resolve(pins)?)),
            RawExpr::Xor(a, b) => Expr::Xor(Box::new(a.resolve(pins)?), Box::new(b.resolve(pins)?)),
        })
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            message: message.into(),
            column: self.pos + 1,
        }
    }

    fn or(&mut self) -> Result<RawExpr, ExprError> {
        let mut lhs = self.xor()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            lhs = RawExpr::Or(Box::new(lhs), Box::new(self.xor()?));
        }
        Ok(lhs)
    }

    fn xor(&mut self) -> Result<RawExpr, ExprError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(b'^') {
            self.pos += 1;
            lhs = RawExpr::Xor(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<RawExpr, ExprError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            lhs = RawExpr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RawExpr, ExprError> {
        match self.peek() {
            Some(b'!') | Some(b'~') => {
                self.pos += 1;
                Ok(RawExpr::Not(Box::new(self.unary()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.or()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'0') => {
                self.pos += 1;
                Ok(RawExpr::Const(false))
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(RawExpr::Const(true))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Ok(RawExpr::Name(
                    String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
                ))
            }
            Some(c) => Err(self.err(format!("unexpected '{}'", c as char))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

pub(crate) fn parse_raw(text: &str) -> Result<RawExpr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.or()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

impl Expr {
    /// Parses `text` with pin names resolved against `pins`.
    pub fn parse(text: &str, pins: &[String]) -> Result<Expr, ExprError> {
        parse_raw(text)?.resolve(pins).map_err(|name| ExprError {
            message: format!("undeclared pin '{name}'"),
            column: text.find(name.as_str()).map_or(1, |c| c + 1),
        })
    }

    pub fn eval(&self, inputs: &[Logic]) -> Logic {
        match self {
            Expr::Const(b) => Logic::from_bool(*b),
            Expr::Pin(i) => inputs[*i],
            Expr::Not(a) => !a.eval(inputs),
            Expr::And(a, b) => a.eval(inputs) & b.eval(inputs),
            Expr::Or(a, b) => a.eval(inputs) | b.eval(inputs),
            Expr::Xor(a, b) => a.eval(inputs) ^ b.eval(inputs),
        }
    }

    pub fn eval64(&self, inputs: &[Tern64]) -> Tern64 {
        match self {
            Expr::Const(b) => Tern64::splat(Logic::from_bool(*b)),
            Expr::Pin(i) => inputs[*i],
            Expr::Not(a) => !a.eval64(inputs),
            Expr::And(a, b) => a.eval64(inputs) & b.eval64(inputs),
            Expr::Or(a, b) => a.eval64(inputs) | b.eval64(inputs),
            Expr::Xor(a, b) => a.eval64(inputs) ^ b.eval64(inputs),
        }
    }

    /// Two-valued evaluation with inputs packed as bits of `assignment`.
    pub fn eval_bits(&self, assignment: u64) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Pin(i) => assignment >> i & 1 == 1,
            Expr::Not(a) => !a.eval_bits(assignment),
            Expr::And(a, b) => a.eval_bits(assignment) && b.eval_bits(assignment),
            Expr::Or(a, b) => a.eval_bits(assignment) || b.eval_bits(assignment),
            Expr::Xor(a, b) => a.eval_bits(assignment) ^ b.eval_bits(assignment),
        }
    }

    /// Signal probability of the output assuming independent inputs, using
    /// the AND2/OR2/NOT rules. XOR is expanded to `(a & !b) | (!a & b)`,
    /// whose two terms are disjoint, so their probabilities add.
    pub fn probability(&self, inputs: &[f64]) -> f64 {
        match self {
            Expr::Const(b) => f64::from(u8::from(*b)),
            Expr::Pin(i) => inputs[*i],
            Expr::Not(a) => 1.0 - a.probability(inputs),
            Expr::And(a, b) => a.probability(inputs) * b.probability(inputs),
            Expr::Or(a, b) => {
                let (pa, pb) = (a.probability(inputs), b.probability(inputs));
                pa + pb - pa * pb
            }
            Expr::Xor(a, b) => {
                let (pa, pb) = (a.probability(inputs), b.probability(inputs));
                pa * (1.0 - pb) + (1.0 - pa) * pb
            }
        }
    }

    /// Highest pin index referenced plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Pin(i) => i + 1,
            Expr::Not(a) => a.arity(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn display<'a>(&'a self, pins: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, pins }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    pins: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(e: &Expr, pins: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                Expr::Const(b) => write!(f, "{}", u8::from(*b)),
                Expr::Pin(i) => write!(f, "{}", pins[*i]),
                Expr::Not(a) => {
                    write!(f, "!")?;
                    go(a, pins, f)
                }
                Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => {
                    let op = match e {
                        Expr::And(..) => '&',
                        Expr::Or(..) => '|',
                        _ => '^',
                    };
                    write!(f, "(")?;
                    go(a, pins, f)?;
                    write!(f, " {op} ")?;
                    go(b, pins, f)?;
                    write!(f, ")")
                }
            }
        }
        go(self.expr, self.pins, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pins(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precedence() {
        let p = pins(&["a", "b", "c"]);
        // a | b & c == a | (b & c)
        let e = Expr::parse("a | b & c", &p).unwrap();
        for bits in 0..8u64 {
            let (a, b, c) = (bits & 1 == 1, bits & 2 == 2, bits & 4 == 4);
            assert_eq!(e.eval_bits(bits), a || (b && c));
        }
        let e = Expr::parse("!(a ^ b) & ~c", &p).unwrap();
        for bits in 0..8u64 {
            let (a, b, c) = (bits & 1 == 1, bits & 2 == 2, bits & 4 == 4);
            assert_eq!(e.eval_bits(bits), !(a ^ b) && !c);
        }
    }

    #[test]
    fn controlling_values() {
        let e = Expr::parse("a & b", &pins(&["a", "b"])).unwrap();
        assert_eq!(e.eval(&[Logic::Zero, Logic::X]), Logic::Zero);
        assert_eq!(e.eval(&[Logic::One, Logic::X]), Logic::X);
        let e = Expr::parse("a ^ b", &pins(&["a", "b"])).unwrap();
        assert_eq!(e.eval(&[Logic::One, Logic::Zero]), Logic::One);
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("a & c", &pins(&["a", "b"])).is_err());
        assert!(Expr::parse("a & (b", &pins(&["a", "b"])).is_err());
        assert!(Expr::parse("a b", &pins(&["a", "b"])).is_err());
        assert!(Expr::parse("", &pins(&[])).is_err());
    }

    #[test]
    fn probability_rules() {
        let p = pins(&["a", "b"]);
        let and = Expr::parse("a & b", &p).unwrap();
        assert_eq!(and.probability(&[0.5, 0.5]), 0.25);
        let or = Expr::parse("a | b", &p).unwrap();
        assert_eq!(or.probability(&[0.5, 0.5]), 0.75);
        let not = Expr::parse("!a", &p).unwrap();
        assert_eq!(not.probability(&[0.25, 0.0]), 0.75);
        let xor = Expr::parse("a ^ b", &p).unwrap();
        assert_eq!(xor.probability(&[0.5, 0.5]), 0.5);
        assert_eq!(xor.probability(&[0.25, 0.5]), 0.5);
        assert_eq!(xor.probability(&[0.25, 0.0]), 0.25);
    }
}
