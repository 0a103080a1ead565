//! Expressions in the radius `r` for user-supplied coefficient profiles.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := NUMBER | 'r' | IDENT '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-r^4`
//! is `-(r^4)` and `2^-1` is `0.5`. Functions: exp, log, sqrt, sin, cos, abs.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::finite_diff::{self, Order};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        match self {
            Func::Log if x <= 0.0 => Err(EvalError::DomainError(format!(
                "log of non-positive value {x}"
            ))),
            Func::Sqrt if x < 0.0 => Err(EvalError::DomainError(format!(
                "sqrt of negative value {x}"
            ))),
            Func::Exp => Ok(x.exp()),
            Func::Log => Ok(x.ln()),
            Func::Sqrt => Ok(x.sqrt()),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Abs => Ok(x.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree. Immutable once parsed.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Num(f64),
    Var,
    Neg(Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
    Call(Func, Box<ExprAst>),
}

// binding strength used by the printer
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

impl ExprAst {
    fn precedence(&self) -> u8 {
        match self {
            ExprAst::Num(_) | ExprAst::Var | ExprAst::Call(..) => PREC_ATOM,
            ExprAst::Neg(_) => PREC_UNARY,
            ExprAst::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_SUM,
            ExprAst::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_PRODUCT,
            ExprAst::Binary(BinOp::Pow, ..) => PREC_POWER,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            ExprAst::Num(x) => write!(f, "{x}"),
            ExprAst::Var => write!(f, "r"),
            ExprAst::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, PREC_UNARY)
            }
            ExprAst::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
            ExprAst::Binary(op, a, b) => {
                let (left, right) = match op {
                    BinOp::Add | BinOp::Sub => (PREC_SUM, PREC_SUM + 1),
                    BinOp::Mul | BinOp::Div => (PREC_PRODUCT, PREC_PRODUCT + 1),
                    BinOp::Pow => (PREC_ATOM, PREC_UNARY),
                };
                a.write_at(f, left)?;
                write!(f, "{}", op.symbol())?;
                b.write_at(f, right)
            }
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64, EvalError> {
        let v = match self {
            ExprAst::Num(x) => *x,
            ExprAst::Var => r,
            ExprAst::Neg(a) => -a.eval(r)?,
            ExprAst::Call(func, a) => func.apply(a.eval(r)?)?,
            ExprAst::Binary(op, a, b) => {
                let (x, y) = (a.eval(r)?, b.eval(r)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => power(x, y)?,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(self.to_string()))
        }
    }
}

fn power(x: f64, y: f64) -> Result<f64, EvalError> {
    if x == 0.0 && y == 0.0 {
        return Ok(1.0);
    }
    if x < 0.0 && y.fract() != 0.0 {
        return Err(EvalError::DomainError(format!(
            "{x}^{y} with negative base and non-integer exponent"
        )));
    }
    Ok(x.powf(y))
}

/// Canonical text; re-parsing it yields the same tree.
impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let end = scan_number(bytes, i)
                    .ok_or_else(|| ParseError::new(start, "malformed number"))?;
                let text = &src[i..end];
                let x: f64 = text
                    .parse()
                    .map_err(|_| ParseError::new(start, format!("malformed number '{text}'")))?;
                if !x.is_finite() {
                    return Err(ParseError::new(start, format!("number '{text}' overflows")));
                }
                i = end;
                out.push((start, Tok::Num(x)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::new(
                    start,
                    format!("unexpected character '{ch}'"),
                ));
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

/// End of a decimal literal `digits [. digits] [(e|E) [+|-] digits]` starting at `i`.
fn scan_number(b: &[u8], mut i: usize) -> Option<usize> {
    let digits = |b: &[u8], mut i: usize| {
        let s = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        (i, i - s)
    };
    let (j, int_digits) = digits(b, i);
    i = j;
    let mut frac_digits = 0;
    if i < b.len() && b[i] == b'.' {
        let (j, n) = digits(b, i + 1);
        i = j;
        frac_digits = n;
    }
    if int_digits + frac_digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut k = i + 1;
        if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
            k += 1;
        }
        let (j, n) = digits(b, k);
        if n == 0 {
            return None;
        }
        i = j;
    }
    Some(i)
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

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<ExprAst, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<ExprAst, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<ExprAst, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(ExprAst::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(ExprAst::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprAst, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(x) => Ok(ExprAst::Num(x)),
            Tok::Ident(name) if name == "r" => Ok(ExprAst::Var),
            Tok::Ident(name) => {
                let func = Func::from_name(&name)
                    .ok_or_else(|| ParseError::new(at, format!("unknown identifier '{name}'")))?;
                let open = self.offset();
                if self.bump() != Tok::LParen {
                    return Err(ParseError::new(
                        open,
                        format!("expected '(' after '{name}'"),
                    ));
                }
                let arg = self.expr()?;
                self.close(open)?;
                Ok(ExprAst::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.close(at)?;
                Ok(inner)
            }
            Tok::RParen => Err(ParseError::new(at, "unbalanced parenthesis")),
            Tok::End => Err(ParseError::new(at, "unexpected end of input")),
            other => Err(ParseError::new(
                at,
                format!("unexpected {}", describe(&other)),
            )),
        }
    }

    fn close(&mut self, open: usize) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            Tok::End => Err(ParseError::new(open, "unbalanced parenthesis")),
            other => Err(ParseError::new(
                self.offset(),
                format!("expected ')' but found {}", describe(other)),
            )),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::End => "end of input".into(),
    }
}

pub fn parse(source: &str) -> Result<ExprAst, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let ast = p.expr()?;
    match p.peek() {
        Tok::End => Ok(ast),
        Tok::RParen => Err(ParseError::new(p.offset(), "unbalanced parenthesis")),
        other => Err(ParseError::new(
            p.offset(),
            format!("trailing input starting with {}", describe(other)),
        )),
    }
}

/// A coefficient r ↦ f(r) given by an expression. Serializes as its source
/// text.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    source: String,
    ast: ExprAst,
}

impl RadialProfile {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        Ok(Self {
            source: source.to_string(),
            ast: parse(source)?,
        })
    }

    pub fn constant(value: f64) -> Self {
        let ast = if value < 0.0 {
            ExprAst::Neg(Box::new(ExprAst::Num(-value)))
        } else {
            ExprAst::Num(value)
        };
        Self {
            source: ast.to_string(),
            ast,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &ExprAst {
        &self.ast
    }

    /// Value at r ≥ 0.
    pub fn eval(&self, r: f64) -> Result<f64, EvalError> {
        if r.is_nan() || r < 0.0 {
            return Err(EvalError::DomainError(format!("radius {r} outside [0, ∞)")));
        }
        self.ast.eval(r)
    }

    /// First or second derivative at r ≥ 0 by extrapolated finite differences.
    pub fn derivative(&self, r: f64, order: Order) -> Result<f64, EvalError> {
        if r.is_nan() || r < 0.0 {
            return Err(EvalError::DomainError(format!("radius {r} outside [0, ∞)")));
        }
        finite_diff::derivative(|x| self.ast.eval(x), r, order)
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for RadialProfile {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        Self::parse(s)
    }
}

impl Serialize for RadialProfile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for RadialProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, r: f64) -> f64 {
        RadialProfile::parse(src).unwrap().eval(r).unwrap()
    }

    #[test]
    fn builtin_coefficients() {
        assert_eq!(at("2*r^2+1", 1.0), 3.0);
        assert_eq!(at("(2*r^2+1)/(1-r^4*exp(-r^4))^2", 0.0), 1.0);
        let e = std::f64::consts::E;
        assert!((at("r^2*exp(r^2)+1", 1.0) - (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn unary_minus_is_looser_than_power() {
        assert_eq!(at("-2^2", 0.0), -4.0);
        assert_eq!(at("exp(-r^4)", 2.0), (-16.0f64).exp());
        assert_eq!(at("2^-1", 0.0), 0.5);
        assert_eq!(at("(-2)^2", 0.0), 4.0);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(at("2^3^2", 0.0), 512.0);
    }

    #[test]
    fn left_associative_sums_and_products() {
        assert_eq!(at("1-2-3", 0.0), -4.0);
        assert_eq!(at("8/4/2", 0.0), 1.0);
    }

    #[test]
    fn number_forms() {
        assert_eq!(at("1.5e2", 0.0), 150.0);
        assert_eq!(at(".5", 0.0), 0.5);
        assert_eq!(at("2.", 0.0), 2.0);
        assert_eq!(at("1E-2", 0.0), 0.01);
    }

    #[test]
    fn domain_and_overflow() {
        let p = RadialProfile::parse("sqrt(-1+r)").unwrap();
        assert!(matches!(p.eval(0.0), Err(EvalError::DomainError(_))));
        let p = RadialProfile::parse("log(r)").unwrap();
        assert!(matches!(p.eval(0.0), Err(EvalError::DomainError(_))));
        let p = RadialProfile::parse("(r-1)^0.5").unwrap();
        assert!(matches!(p.eval(0.0), Err(EvalError::DomainError(_))));
        assert_eq!(at("(r-1)^3", 0.0), -1.0);
        let p = RadialProfile::parse("exp(r)").unwrap();
        assert!(matches!(p.eval(1000.0), Err(EvalError::NonFinite(_))));
        let p = RadialProfile::parse("1/r").unwrap();
        assert!(matches!(p.eval(0.0), Err(EvalError::NonFinite(_))));
        assert_eq!(at("r^0", 0.0), 1.0);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = parse("2*foo(r)").unwrap_err();
        assert_eq!(e.offset, 2);
        let e = parse("(r+1").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.message.contains("unbalanced"));
        let e = parse("r+1)").unwrap_err();
        assert_eq!(e.offset, 3);
        let e = parse("r r").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(e.message.contains("trailing"));
        let e = parse("2 + $").unwrap_err();
        assert_eq!(e.offset, 4);
        assert!(parse("").is_err());
        assert!(parse("1e").is_err());
        assert!(parse("1e999").is_err());
        assert!(parse("exp r").is_err());
    }

    #[test]
    fn canonical_printing() {
        let cases = [
            ("2*r^2+1", "2*r^2 + 1"),
            ("-(r^4)", "-r^4"),
            ("(-r)^4", "(-r)^4"),
            ("a", ""),
        ];
        for (src, want) in cases.iter().take(3) {
            assert_eq!(parse(src).unwrap().to_string(), *want);
        }
        assert!(parse(cases[3].0).is_err());
        for src in [
            "1-(2-3)", "1/(2*r)", "2^(3^r)", "(2^3)^r", "r*-1", "--r", "-(1+r)*2",
        ] {
            let ast = parse(src).unwrap();
            assert_eq!(parse(&ast.to_string()).unwrap(), ast, "{src} -> {ast}");
        }
    }

    #[test]
    fn derivatives_of_remark_profiles() {
        let mu = RadialProfile::parse("2*r^2+1").unwrap();
        assert!((mu.derivative(3.0, Order::First).unwrap() - 12.0).abs() < 1e-6);
        for r in [0.0, 0.5, 7.0] {
            assert!((mu.derivative(r, Order::Second).unwrap() - 4.0).abs() < 1e-5);
        }
        let g = RadialProfile::parse("exp(-r^4)").unwrap();
        assert!(g.derivative(0.0, Order::First).unwrap().abs() < 1e-6);
    }

    #[test]
    fn serde_uses_source_text() {
        let p = RadialProfile::parse("2*r^2+1").unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"2*r^2+1\"");
        let back: RadialProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<RadialProfile>("\"2*\"").is_err());
    }
}
