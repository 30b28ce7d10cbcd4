//! Sparse polynomials over the rationals in tagged generators.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::ParseError;
use crate::scalar::{format_rational, parse_rational, Rational};

/// A generator. `Var { index, mask }` is `X_index` with the differentials
/// whose bits are set in `mask` applied: bit 0 is `d`, bit 1 is `d_T`, and
/// bit `k` the differential added at level `k + 1`. `Left`/`Right` are the
/// tagged differentials `dL`, `dR` of a tensor square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    Var { index: usize, mask: u32 },
    Left(usize),
    Right(usize),
}

impl Gen {
    pub fn x(i: usize) -> Gen {
        Gen::Var { index: i, mask: 0 }
    }

    pub fn dx(i: usize) -> Gen {
        Gen::Var { index: i, mask: 1 }
    }

    pub fn dtx(i: usize) -> Gen {
        Gen::Var { index: i, mask: 2 }
    }

    pub fn dtdx(i: usize) -> Gen {
        Gen::Var { index: i, mask: 3 }
    }

    /// Number of differentials applied (tensor tags count as one).
    pub fn degree(self) -> u32 {
        match self {
            Gen::Var { mask, .. } => mask.count_ones(),
            Gen::Left(_) | Gen::Right(_) => 1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Gen::Var { index, .. } | Gen::Left(index) | Gen::Right(index) => index,
        }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gen::Var { index, mask } => {
                let prefix = match mask {
                    0 => String::new(),
                    1 => "d".into(),
                    2 => "dT".into(),
                    3 => "dTd".into(),
                    m => format!("d{m}_"),
                };
                write!(f, "{prefix}X{}", index + 1)
            }
            Gen::Left(i) => write!(f, "dL{}", i + 1),
            Gen::Right(i) => write!(f, "dR{}", i + 1),
        }
    }
}

/// A monomial as generator exponents (all positive).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(BTreeMap<Gen, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn gen(g: Gen) -> Self {
        Monomial(BTreeMap::from([(g, 1)]))
    }

    pub fn exponent(&self, g: Gen) -> u32 {
        self.0.get(&g).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (Gen, u32)> + '_ {
        self.0.iter().map(|(g, e)| (*g, *e))
    }

    /// Total differential degree.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(g, e)| g.degree() * e).sum()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.values().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (g, e) in &other.0 {
            *out.entry(*g).or_default() += e;
        }
        Monomial(out)
    }

    fn without(&self, g: Gen) -> Monomial {
        let mut out = self.0.clone();
        match out.get_mut(&g) {
            Some(e) if *e > 1 => *e -= 1,
            Some(_) => {
                out.remove(&g);
            }
            None => {}
        }
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(g, e)| if *e == 1 { g.to_string() } else { format!("{g}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// A polynomial in canonical form: sorted monomials, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn gen(g: Gen) -> Self {
        Self::term(Rational::one(), Monomial::gen(g))
    }

    pub fn x(i: usize) -> Self {
        Self::gen(Gen::x(i))
    }

    pub fn dx(i: usize) -> Self {
        Self::gen(Gen::dx(i))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coefficients(&self) -> Vec<Rational> {
        self.terms.values().cloned().collect()
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::one(), |acc, _| &acc * self)
    }

    /// Generators that occur.
    pub fn gens(&self) -> Vec<Gen> {
        let mut out: Vec<Gen> = self.terms.keys().flat_map(|m| m.0.keys().copied()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Homogeneous part of the given differential degree.
    pub fn part_of_degree(&self, d: u32) -> Poly {
        Poly {
            terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// Largest total degree in the generators.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    pub fn partial(&self, g: Gen) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(g);
            if e > 0 {
                out.add_term(m.without(g), c * Rational::from_integer(e.into()));
            }
        }
        out
    }

    /// The algebra morphism sending each generator to `image(g)`; generators
    /// without an image are kept.
    pub fn substitute<F: Fn(Gen) -> Option<Poly>>(&self, image: F) -> Poly {
        let mut cache: BTreeMap<Gen, Poly> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for (g, e) in m.factors() {
                let img = cache.entry(g).or_insert_with(|| image(g).unwrap_or_else(|| Poly::gen(g))).clone();
                t = &t * &img.pow(e);
            }
            out = &out + &t;
        }
        out
    }

    /// The derivation with `D(g) = image(g)` (zero where `None`).
    pub fn derive<F: Fn(Gen) -> Option<Poly>>(&self, image: F) -> Poly {
        let mut out = Poly::zero();
        for g in self.gens() {
            if let Some(dg) = image(g) {
                out = &out + &(&self.partial(g) * &dg);
            }
        }
        out
    }

    pub fn parse(src: &str) -> Result<Poly, ParseError> {
        Parser { src, pos: 0 }.parse()
    }

    /// A random polynomial in `gens` with small integer coefficients.
    pub fn random(rng: &mut impl Rng, gens: &[Gen], max_degree: u32, terms: usize) -> Poly {
        let mut p = Poly::zero();
        for _ in 0..terms {
            let deg = rng.gen_range(0..=max_degree);
            let mut m = Monomial::one();
            for _ in 0..deg {
                m = m.mul(&Monomial::gen(gens[rng.gen_range(0..gens.len())]));
            }
            let c: i64 = rng.gen_range(-3..=3);
            p.add_term(m, Rational::from_integer(c.into()));
        }
        p
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl std::ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let unit = m.0.is_empty();
            if a.is_one() && !unit {
                write!(f, "{m}")?;
            } else if unit {
                write!(f, "{}", format_rational(&a))?;
            } else {
                write!(f, "{}*{m}", format_rational(&a))?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.src, self.pos, msg)
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<Poly, ParseError> {
        let p = self.expr()?;
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly, ParseError> {
        if self.eat('-') {
            return Ok(-&self.factor()?);
        }
        let base = self.base()?;
        if self.eat('^') {
            self.skip_ws();
            let start = self.pos;
            let digits = self.src[start..].chars().take_while(char::is_ascii_digit).count();
            if digits == 0 {
                return Err(self.err("expected a non-negative integer exponent"));
            }
            self.pos += digits;
            let e: u32 = self.src[start..self.pos].parse().map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Poly, ParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let p = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(p)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                let len = self.src[start..].chars().take_while(|c| c.is_ascii_digit() || *c == '/').count();
                self.pos += len;
                let text = &self.src[start..self.pos];
                parse_rational(text)
                    .map(Poly::constant)
                    .ok_or_else(|| ParseError::new(self.src, start, format!("invalid rational `{text}`")))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let len = self.src[start..].chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').count();
                self.pos += len;
                let name = &self.src[start..self.pos];
                parse_gen(name)
                    .map(Poly::gen)
                    .ok_or_else(|| ParseError::new(self.src, start, format!("unknown generator `{name}`")))
            }
            Some(_) => Err(self.err("expected a number, generator or `(`")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// `X1`, `dX1`, `dTX1`, `dTdX1`, `d5_X1`, `dL1`, `dR1`; the index may be
/// omitted for the first variable.
fn parse_gen(name: &str) -> Option<Gen> {
    let index = |s: &str| -> Option<usize> {
        if s.is_empty() {
            Some(0)
        } else {
            s.parse::<usize>().ok().filter(|i| *i >= 1).map(|i| i - 1)
        }
    };
    if let Some(rest) = name.strip_prefix("dL") {
        return index(rest).map(Gen::Left);
    }
    if let Some(rest) = name.strip_prefix("dR") {
        return index(rest).map(Gen::Right);
    }
    let (mask, rest) = if let Some(r) = name.strip_prefix("dTdX") {
        (3, r)
    } else if let Some(r) = name.strip_prefix("dTX") {
        (2, r)
    } else if let Some(r) = name.strip_prefix("dX") {
        (1, r)
    } else if let Some(r) = name.strip_prefix('X') {
        (0, r)
    } else if let Some(r) = name.strip_prefix('d') {
        let (m, r) = r.split_once("_X")?;
        (m.parse().ok()?, r)
    } else {
        return None;
    };
    index(rest).map(|index| Gen::Var { index, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn arithmetic_is_canonical() {
        let x = Poly::x(0);
        let p = &(&x + &Poly::one()) * &(&x - &Poly::one());
        assert_eq!(p, &x.pow(2) - &Poly::one());
        assert!((&p - &p).is_zero());
        assert_eq!(p.partial(Gen::x(0)), x.scale(&int(2)));
    }

    #[test]
    fn text_round_trip() {
        let p = Poly::parse("3/2*X1^2*dX1 + X2 - dTdX1*dL2").unwrap();
        assert_eq!(p.coefficient(&Monomial::gen(Gen::x(1))), int(1));
        let back = Poly::parse(&p.to_string()).unwrap();
        assert_eq!(back, p);
        assert_eq!(Poly::parse("X*(X + 1)").unwrap(), Poly::parse("X1^2 + X1").unwrap());
        assert_eq!(Poly::parse("d4_X2").unwrap(), Poly::gen(Gen::Var { index: 1, mask: 4 }));
        assert_eq!(Poly::parse("-1/2").unwrap(), Poly::constant(rat(-1, 2)));
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = Poly::parse("X1 + Y2").unwrap_err();
        assert_eq!(e.pos, 5);
        let e = Poly::parse("X1^").unwrap_err();
        assert_eq!(e.pos, 3);
    }

    #[test]
    fn substitution_is_multiplicative() {
        let p = Poly::parse("X1^2*dX1 + 3").unwrap();
        let q = p.substitute(|g| (g == Gen::x(0)).then(|| Poly::parse("X1 + 1").unwrap()));
        assert_eq!(q, Poly::parse("(X1+1)^2*dX1 + 3").unwrap());
    }
}
