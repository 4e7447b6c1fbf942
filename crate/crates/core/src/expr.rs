//! Expression trees for metric components and test functions.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! var    := 'x' digits            (x0 .. x{n-1})
//! func   := exp | log | sin | cos | sinh | cosh
//! ```
//!
//! `^` binds tighter than unary minus, so `-x0^2` is `-(x0^2)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Arithmetic needed to evaluate an expression tree.
pub trait Arith: Clone {
    fn constant_like(&self, c: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn call(&self, f: Func) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn powf(&self, p: f64) -> Self;
}

impl Arith for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn call(&self, f: Func) -> Self {
        match f {
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sinh => self.sinh(),
            Func::Cosh => self.cosh(),
        }
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
}

impl Arith for Complex64 {
    fn constant_like(&self, c: f64) -> Self {
        Complex64::new(c, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn call(&self, f: Func) -> Self {
        match f {
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sinh => self.sinh(),
            Func::Cosh => self.cosh(),
        }
    }
    fn powi(&self, n: i32) -> Self {
        Complex64::powi(self, n)
    }
    fn powf(&self, p: f64) -> Self {
        Scalar::powf(*self, p)
    }
}

impl<T: Scalar> Arith for Jet<T> {
    fn constant_like(&self, c: f64) -> Self {
        self.lift(T::from_f64(c))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self.mul_ref(o)
    }
    fn div(&self, o: &Self) -> Self {
        self.mul_ref(&o.recip())
    }
    fn neg(&self) -> Self {
        -self
    }
    fn call(&self, f: Func) -> Self {
        match f {
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sinh => self.sinh(),
            Func::Cosh => self.cosh(),
        }
    }
    fn powi(&self, n: i32) -> Self {
        Jet::powi(self, n)
    }
    fn powf(&self, p: f64) -> Self {
        Jet::powf(self, p)
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// Value of the expression if it contains no variables.
    pub fn constant_value(&self) -> Option<f64> {
        if self.max_var().is_some() {
            return None;
        }
        Some(self.eval(&[0.0f64]))
    }

    /// Largest variable index referenced.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Evaluate with the given variable values. `vars` must be non-empty
    /// (it also provides the shape for constants).
    pub fn eval<A: Arith>(&self, vars: &[A]) -> A {
        match self {
            Expr::Num(v) => vars[0].constant_like(*v),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Neg(a) => a.eval(vars).neg(),
            Expr::Add(a, b) => a.eval(vars).add(&b.eval(vars)),
            Expr::Sub(a, b) => a.eval(vars).sub(&b.eval(vars)),
            Expr::Mul(a, b) => a.eval(vars).mul(&b.eval(vars)),
            Expr::Div(a, b) => a.eval(vars).div(&b.eval(vars)),
            Expr::Call(f, a) => a.eval(vars).call(*f),
            Expr::Pow(a, b) => {
                let base = a.eval(vars);
                match b.constant_value() {
                    Some(p) if p.fract() == 0.0 && p.abs() <= 64.0 => base.powi(p as i32),
                    Some(p) => base.powf(p),
                    None => base.call(Func::Log).mul(&b.eval(vars)).call(Func::Exp),
                }
            }
        }
    }
}

/// Parse an expression over the variables `x0 .. x{nvars-1}`.
pub fn parse_expr(src: &str, nvars: usize) -> Result<Expr> {
    parse_expr_in(src, nvars, "expression")
}

pub(crate) fn parse_expr_in(src: &str, nvars: usize, context: &str) -> Result<Expr> {
    let mut p = Parser::new(src, nvars, context);
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(p.pos, "unexpected trailing input"));
    }
    Ok(e)
}

/// Parse a comma-separated argument list `f(a, b, ...)` at top level, e.g. `diag(1, -1)`.
pub(crate) fn parse_call_list(src: &str, name: &str, nvars: usize, context: &str) -> Result<Option<Vec<Expr>>> {
    let trimmed = src.trim_start();
    let offset = src.len() - trimmed.len();
    if !trimmed.starts_with(name) {
        return Ok(None);
    }
    let mut p = Parser::new(src, nvars, context);
    p.pos = offset + name.len();
    p.skip_ws();
    if p.peek() != Some(b'(') {
        return Ok(None);
    }
    p.pos += 1;
    let mut args = vec![p.expr()?];
    loop {
        p.skip_ws();
        match p.peek() {
            Some(b',') => {
                p.pos += 1;
                args.push(p.expr()?);
            }
            Some(b')') => {
                p.pos += 1;
                break;
            }
            _ => return Err(p.error(p.pos, "expected ',' or ')'")),
        }
    }
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(p.pos, "unexpected trailing input"));
    }
    Ok(Some(args))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
    context: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, nvars: usize, context: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
            nvars,
            context,
        }
    }

    fn error(&self, pos: usize, msg: impl Into<String>) -> Error {
        Error::Syntax {
            context: self.context.to_string(),
            pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = match self.peek() {
            None => return Err(self.error(self.pos, "unexpected end of input")),
            Some(_) => self.pos,
        };
        let c = self.src[start];
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.error(self.pos, "expected ')'"));
            }
            self.pos += 1;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() {
            let mut end = start;
            while end < self.src.len() && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_') {
                end += 1;
            }
            let ident = std::str::from_utf8(&self.src[start..end]).unwrap();
            self.pos = end;
            if ident == "pi" {
                return Ok(Expr::Num(std::f64::consts::PI));
            }
            if let Some(f) = Func::from_name(ident) {
                if self.peek() != Some(b'(') {
                    return Err(self.error(self.pos, format!("expected '(' after {ident}")));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error(self.pos, "expected ')'"));
                }
                self.pos += 1;
                return Ok(Expr::Call(f, Box::new(arg)));
            }
            if let Some(digits) = ident.strip_prefix('x') {
                if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                    let idx: usize = digits
                        .parse()
                        .map_err(|_| self.error(start, format!("unknown variable {ident}")))?;
                    if idx >= self.nvars {
                        return Err(self.error(start, format!("unknown variable {ident}")));
                    }
                    return Ok(Expr::Var(idx));
                }
            }
            return Err(self.error(start, format!("unknown identifier {ident}")));
        }
        Err(self.error(start, format!("unexpected character '{}'", c as char)))
    }

    fn number(&mut self, start: usize) -> Result<Expr> {
        let mut end = start;
        let s = self.src;
        while end < s.len() && (s[end].is_ascii_digit() || s[end] == b'.') {
            end += 1;
        }
        if end < s.len() && (s[end] == b'e' || s[end] == b'E') {
            let mut k = end + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                while k < s.len() && s[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = std::str::from_utf8(&s[start..end]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| self.error(start, format!("malformed number '{text}'")))?;
        self.pos = end;
        Ok(Expr::Num(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        parse_expr(src, x.len()).unwrap().eval(x)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", &[0.0]), 7.0);
        assert_eq!(ev("-x0^2", &[3.0]), -9.0);
        assert_eq!(ev("2^3^2", &[0.0]), 512.0);
        assert_eq!(ev("(1 + 2) * 3 / 9", &[0.0]), 1.0);
        assert_eq!(ev("x0 - x1 - 1", &[5.0, 2.0]), 2.0);
        assert_eq!(ev("1.5e1 + .5", &[0.0]), 15.5);
    }

    #[test]
    fn functions() {
        let v = ev("exp(2*x0) + sin(x1)^2 + cosh(0) - log(exp(1))", &[0.25, 1.0]);
        let expect = 0.5f64.exp() + 1f64.sin().powi(2) + 1.0 - 1.0;
        assert!((v - expect).abs() < 1e-15);
        assert!((ev("pi", &[0.0]) - std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn errors_carry_position() {
        match parse_expr("1 + x9", 4) {
            Err(Error::Syntax { pos, msg, .. }) => {
                assert_eq!(pos, 4);
                assert!(msg.contains("unknown variable"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_expr("1 + * 2", 2) {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("sin x0", 1).is_err());
        assert!(parse_expr("(1 + 2", 1).is_err());
        assert!(parse_expr("1 2", 1).is_err());
        assert!(parse_expr("foo(1)", 1).is_err());
    }

    #[test]
    fn variable_exponent() {
        let v = ev("x0^x1", &[2.0, 0.5]);
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diag_list() {
        let args = parse_call_list("diag(1, -exp(2*x0), 3)", "diag", 1, "g").unwrap().unwrap();
        assert_eq!(args.len(), 3);
        assert!((args[1].eval(&[0.5]) + 1f64.exp()).abs() < 1e-15);
        assert!(parse_call_list("1 + 2", "diag", 1, "g").unwrap().is_none());
    }
}
