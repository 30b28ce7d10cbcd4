//! Closed-form expression trees over indexed variables.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Signed, Zero};

use crate::error::{EvalError, ParseError};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constant {
    Exact(Rational),
    Float(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(usize),
    Const(Constant),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Unary(Func, Box<Expr>),
    Atan2(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Constant::Exact(crate::scalar::int(n)))
    }

    pub fn rational(r: Rational) -> Expr {
        Expr::Const(Constant::Exact(r))
    }

    pub fn float(x: f64) -> Expr {
        Expr::Const(Constant::Float(x))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn apply(self, f: Func) -> Expr {
        Expr::Unary(f, Box::new(self))
    }

    pub fn sin(self) -> Expr {
        self.apply(Func::Sin)
    }

    pub fn cos(self) -> Expr {
        self.apply(Func::Cos)
    }

    pub fn exp(self) -> Expr {
        self.apply(Func::Exp)
    }

    pub fn ln(self) -> Expr {
        self.apply(Func::Log)
    }

    pub fn sqrt(self) -> Expr {
        self.apply(Func::Sqrt)
    }

    pub fn atan2(self, x: Expr) -> Expr {
        Expr::Atan2(Box::new(self), Box::new(x))
    }

    /// Evaluates over any scalar backend. `vars` must be non-empty; its first
    /// entry fixes the kind of every constant.
    pub fn eval<S: Scalar>(&self, vars: &[S]) -> Result<S, EvalError> {
        let proto = vars.first().ok_or(EvalError::Arity { expected: 1, got: 0 })?;
        self.eval_with(vars, proto)
    }

    fn eval_with<S: Scalar>(&self, vars: &[S], proto: &S) -> Result<S, EvalError> {
        Ok(match self {
            Expr::Var(i) => vars
                .get(*i)
                .cloned()
                .ok_or(EvalError::Arity { expected: i + 1, got: vars.len() })?,
            Expr::Const(Constant::Exact(r)) => proto.constant(r),
            Expr::Const(Constant::Float(x)) => proto.constant_f64(*x),
            Expr::Neg(a) => -a.eval_with(vars, proto)?,
            Expr::Add(a, b) => a.eval_with(vars, proto)? + b.eval_with(vars, proto)?,
            Expr::Sub(a, b) => a.eval_with(vars, proto)? - b.eval_with(vars, proto)?,
            Expr::Mul(a, b) => a.eval_with(vars, proto)? * b.eval_with(vars, proto)?,
            Expr::Div(a, b) => a.eval_with(vars, proto)?.div(&b.eval_with(vars, proto)?)?,
            Expr::Pow(a, n) => a.eval_with(vars, proto)?.powi(*n)?,
            Expr::Unary(f, a) => {
                let a = a.eval_with(vars, proto)?;
                match f {
                    Func::Sin => a.sin()?,
                    Func::Cos => a.cos()?,
                    Func::Exp => a.exp()?,
                    Func::Log => a.ln()?,
                    Func::Sqrt => a.sqrt()?,
                }
            }
            Expr::Atan2(y, x) => y.eval_with(vars, proto)?.atan2(&x.eval_with(vars, proto)?)?,
        })
    }

    /// True when exact rational evaluation is possible (no transcendental
    /// functions, no float constants).
    pub fn is_rational(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Const(Constant::Exact(_)) => true,
            Expr::Const(Constant::Float(_)) | Expr::Unary(..) | Expr::Atan2(..) => false,
            Expr::Neg(a) | Expr::Pow(a, _) => a.is_rational(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.is_rational() && b.is_rational(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) => None,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Unary(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Atan2(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    /// Replaces `Var(i)` by `images[i]`.
    pub fn substitute(&self, images: &[Expr]) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(images));
        match self {
            Expr::Var(i) => images[*i].clone(),
            Expr::Const(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Pow(a, n) => Expr::Pow(s(a), *n),
            Expr::Unary(f, a) => Expr::Unary(*f, s(a)),
            Expr::Atan2(a, b) => Expr::Atan2(s(a), s(b)),
        }
    }

    /// Parses `src` with the given variable names (see [`Parser`] for the grammar).
    pub fn parse(src: &str, names: &[impl AsRef<str>]) -> Result<Expr, ParseError> {
        let names: Vec<&str> = names.iter().map(AsRef::as_ref).collect();
        Parser::new(src, &names).parse()
    }

    /// Renders with the given variable names; the output parses back to an
    /// expression with the same value.
    pub fn display<'a>(&'a self, names: &'a [String]) -> Display<'a> {
        Display { expr: self, names }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(Constant::Exact(r)) if !r.is_integer() => 2,
            Expr::Const(Constant::Exact(r)) if r.is_negative() => 3,
            Expr::Const(Constant::Float(x)) if *x < 0.0 || x.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl Display<'_> {
    fn child(&self, e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = Display { expr: e, names: self.names };
        if e.precedence() < min {
            write!(f, "({d})")
        } else {
            write!(f, "{d}")
        }
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => f.write_str(n),
                None => write!(f, "_{i}"),
            },
            Expr::Const(Constant::Exact(r)) => f.write_str(&format_rational(r)),
            Expr::Const(Constant::Float(x)) => write!(f, "{x:?}"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.child(a, 3, f)
            }
            Expr::Add(a, b) => {
                self.child(a, 1, f)?;
                f.write_str(" + ")?;
                self.child(b, 2, f)
            }
            Expr::Sub(a, b) => {
                self.child(a, 1, f)?;
                f.write_str(" - ")?;
                self.child(b, 2, f)
            }
            Expr::Mul(a, b) => {
                self.child(a, 2, f)?;
                f.write_str("*")?;
                self.child(b, 3, f)
            }
            Expr::Div(a, b) => {
                self.child(a, 2, f)?;
                f.write_str("/")?;
                self.child(b, 3, f)
            }
            Expr::Pow(a, n) => {
                self.child(a, 5, f)?;
                write!(f, "^{n}")
            }
            Expr::Unary(func, a) => {
                let d = Display { expr: a, names: self.names };
                write!(f, "{}({d})", func.name())
            }
            Expr::Atan2(y, x) => {
                let dy = Display { expr: y, names: self.names };
                let dx = Display { expr: x, names: self.names };
                write!(f, "atan2({dy}, {dx})")
            }
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $v:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$v(Box::new(self), Box::new(rhs))
            }
        }
    };
}
binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Recursive-descent parser.
///
/// ```text
/// expr  := term (('+' | '-') term)*
/// term  := unary (('*' | '/') unary)*
/// unary := '-' unary | power
/// power := atom ('^' ('-'? INT | '(' '-'? INT ')'))?
/// atom  := NUMBER | NAME | FUNC '(' expr (',' expr)? ')' | '(' expr ')'
/// ```
///
/// Numbers (`2`, `0.5`, `1e-3`) parse as exact rationals. `pi` is the float
/// constant unless declared as a variable. Quotients and negations of exact
/// constants are folded.
pub struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    names: &'a [&'a str],
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str, names: &'a [&'a str]) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            names,
        }
    }

    pub fn parse(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.error(format!("unexpected `{}`", self.peek_char())));
        }
        Ok(e)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.src, self.pos, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or(' ')
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else if self.pos >= self.bytes.len() {
            Err(self.error(format!("expected `{}`, found end of input", c as char)))
        } else {
            Err(self.error(format!("expected `{}`, found `{}`", c as char, self.peek_char())))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs + self.term()?;
            } else if self.eat(b'-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs * self.unary()?;
            } else if self.eat(b'/') {
                let at = self.pos;
                let rhs = self.unary()?;
                lhs = match (lhs, rhs) {
                    (Expr::Const(Constant::Exact(a)), Expr::Const(Constant::Exact(b))) => {
                        if b.is_zero() {
                            self.pos = at;
                            return Err(self.error("division by the constant 0"));
                        }
                        Expr::rational(a / b)
                    }
                    (a, b) => a / b,
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(match self.unary()? {
                Expr::Const(Constant::Exact(r)) => Expr::rational(-r),
                e => -e,
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("exponent must be an integer literal"));
        }
        let n: i32 = self.src[start..self.pos].parse().map_err(|_| {
            ParseError::new(self.src, start, "exponent out of range")
        })?;
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            return Err(self.error("exponent must be an integer literal"));
        }
        if paren {
            self.expect(b')')?;
        }
        Ok(base.powi(if neg { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(_) => Err(self.error(format!("unexpected `{}`", self.peek_char()))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        parse_rational(text)
            .map(Expr::rational)
            .ok_or_else(|| ParseError::new(self.src, start, format!("malformed number `{text}`")))
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let ident = &self.src[start..self.pos];
        if self.peek() == Some(b'(') {
            let is_atan2 = ident == "atan2";
            let func = Func::from_name(ident);
            if func.is_none() && !is_atan2 {
                return Err(ParseError::new(self.src, start, format!("unknown function `{ident}`")));
            }
            self.pos += 1;
            let first = self.expr()?;
            let e = if is_atan2 {
                self.expect(b',')?;
                let second = self.expr()?;
                first.atan2(second)
            } else {
                first.apply(func.expect("checked above"))
            };
            self.expect(b')')?;
            return Ok(e);
        }
        if let Some(i) = self.names.iter().position(|n| *n == ident) {
            return Ok(Expr::Var(i));
        }
        if ident == "pi" {
            return Ok(Expr::float(std::f64::consts::PI));
        }
        let valid = ident.bytes().next().is_some_and(|c| c.is_ascii_lowercase())
            && ident.bytes().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'_');
        let msg = if valid {
            format!("undeclared variable `{ident}` (declared: {})", self.names.join(", "))
        } else {
            format!("invalid variable name `{ident}`")
        };
        Err(ParseError::new(self.src, start, msg))
    }
}

/// `true` for names matching `[a-z][a-z0-9_]*`.
pub fn is_valid_name(s: &str) -> bool {
    let mut b = s.bytes();
    b.next().is_some_and(|c| c.is_ascii_lowercase())
        && b.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'_')
        && Func::from_name(s).is_none()
        && s != "atan2"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::weil::{dual, second_order};
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_precedence() {
        let e = Expr::parse("1 + 2*x^2 - -x/4", &["x"]).unwrap();
        assert_eq!(e.eval(&[int(2)]).unwrap(), rat(19, 2));
        let e = Expr::parse("-x^2", &["x"]).unwrap();
        assert_eq!(e.eval(&[int(3)]).unwrap(), int(-9));
        let e = Expr::parse("x^-2 + x^(-1)", &["x"]).unwrap();
        assert_eq!(e.eval(&[int(2)]).unwrap(), rat(3, 4));
    }

    #[test]
    fn decimals_are_exact() {
        let e = Expr::parse("0.1*x", &["x"]).unwrap();
        assert!(e.is_rational());
        assert_eq!(e.eval(&[int(3)]).unwrap(), rat(3, 10));
    }

    #[test]
    fn errors_carry_positions() {
        let err = Expr::parse("x + * y", &["x", "y"]).unwrap_err();
        assert_eq!(err.pos, 4);
        let err = Expr::parse("x + z", &["x", "y"]).unwrap_err();
        assert_eq!(err.pos, 4);
        assert!(err.msg.contains("undeclared"));
        let err = Expr::parse("x^1.5", &["x"]).unwrap_err();
        assert!(err.msg.contains("integer"));
        let err = Expr::parse("foo(x)", &["x"]).unwrap_err();
        assert_eq!(err.pos, 0);
        assert!(Expr::parse("(x", &["x"]).is_err());
        assert!(Expr::parse("", &["x"]).is_err());
        assert!(err.to_string().contains('^'));
    }

    #[test]
    fn transcendental_flag() {
        assert!(!Expr::parse("sin(x)", &["x"]).unwrap().is_rational());
        assert!(!Expr::parse("atan2(x, 1)", &["x"]).unwrap().is_rational());
        assert!(Expr::parse("x/(1+x^2)", &["x"]).unwrap().is_rational());
    }

    #[test]
    fn dual_lift_is_the_derivative() {
        let e = Expr::parse("x^3", &["x"]).unwrap();
        let a = dual().element(vec![int(2), int(1)]).unwrap();
        assert_eq!(e.eval(&[a]).unwrap().coeffs(), &[int(8), int(12)]);
        let e = Expr::parse("exp(x)", &["x"]).unwrap();
        let a = dual().element(vec![0.0, 1.0]).unwrap();
        assert_eq!(e.eval(&[a]).unwrap().coeffs(), &[1.0, 1.0]);
    }

    #[test]
    fn second_order_square() {
        // oracle: (1 + 2e1 + 3e2)^2 = 1 + 4e1 + 6e2 + 12e1e2
        let e = Expr::parse("x^2", &["x"]).unwrap();
        let a = second_order().element(vec![int(1), int(2), int(3), int(0)]).unwrap();
        assert_eq!(e.eval(&[a]).unwrap().coeffs(), &[int(1), int(4), int(6), int(12)]);
    }

    #[test]
    fn substitution_composes() {
        let f = Expr::parse("x^2 + y", &["x", "y"]).unwrap();
        let g = f.substitute(&[Expr::parse("a + 1", &["a", "b"]).unwrap(), Expr::var(1)]);
        assert_eq!(g.eval(&[int(2), int(5)]).unwrap(), int(14));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0usize..2).prop_map(Expr::Var),
            (-5i64..6, 1i64..4).prop_map(|(n, d)| Expr::rational(rat(n, d))),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| -a),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), -2i32..4).prop_map(|(a, n)| a.powi(n)),
                inner.clone().prop_map(|a| a.sin()),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let n = names(&["x", "y"]);
            let text = e.display(&n).to_string();
            let back = Expr::parse(&text, &n).unwrap();
            let canonical = back.display(&n).to_string();
            let again = Expr::parse(&canonical, &n).unwrap();
            prop_assert_eq!(again.display(&n).to_string(), canonical);
            match (e.eval(&[x, y]), back.eval(&[x, y])) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{}", text),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{text}: {a:?} vs {b:?}"),
            }
        }

        #[test]
        fn dual_matches_central_difference(e in arb_expr(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let h = 1e-5;
            let f = |t: f64| e.eval(&[t, y]);
            let (Ok(fp), Ok(fm), Ok(f0)) = (f(x + h), f(x - h), f(x)) else { return Ok(()) };
            let d = dual();
            let lifted = e.eval(&[d.element(vec![x, 1.0]).unwrap(), d.scalar(y)]);
            let Ok(lifted) = lifted else { return Ok(()) };
            let fd = (fp - fm) / (2.0 * h);
            let (Ok(fp2), Ok(fm2)) = (f(x + h / 2.0), f(x - h / 2.0)) else { return Ok(()) };
            let fd2 = (fp2 - fm2) / h;
            let exact = *lifted.coeff(1);
            prop_assert_eq!(*lifted.coeff(0), f0);
            // skip points near poles or fast oscillation where the difference quotient has not converged
            prop_assume!(fd.is_finite() && exact.abs() < 1e6);
            prop_assume!((fd - fd2).abs() <= 1e-5 * fd.abs().max(1.0));
            prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{fd} vs {exact}");
        }

        #[test]
        fn trivial_algebra_is_bit_identical(e in arb_expr(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let t = std::sync::Arc::new(crate::jets::weil::WeilAlgebra::trivial());
            let plain = e.eval(&[x, y]);
            let lifted = e.eval(&[t.scalar(x), t.scalar(y)]);
            match (plain, lifted) {
                (Ok(a), Ok(b)) => prop_assert!(a == *b.coeff(0) || (a.is_nan() && b.coeff(0).is_nan())),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }
}
