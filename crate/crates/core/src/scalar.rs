//! Commutative scalar arithmetic shared by every evaluator.
//!
//! Expressions, flows and natural transformations are written once against
//! [`Scalar`] and then run over `f64`, exact [`Rational`]s, or Weil elements
//! with either base (including Weil elements over Weil elements).

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

pub type Rational = num_rational::BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// A constant of the same kind as `self` (same backend, same Weil algebra).
    fn constant(&self, c: &Rational) -> Self;
    fn constant_f64(&self, c: f64) -> Self;
    /// Scalar part as a float, used for domain checks and step counts.
    fn real_part(&self) -> f64;
    fn recip(&self) -> Result<Self, EvalError>;
    fn sin(&self) -> Result<Self, EvalError>;
    fn cos(&self) -> Result<Self, EvalError>;
    fn exp(&self) -> Result<Self, EvalError>;
    fn ln(&self) -> Result<Self, EvalError>;
    fn sqrt(&self) -> Result<Self, EvalError>;
    /// Two-argument arctangent `atan2(self, x)`.
    fn atan2(&self, x: &Self) -> Result<Self, EvalError>;
    /// True when every component is exactly zero.
    fn is_exact_zero(&self) -> bool;

    fn zero_like(&self) -> Self {
        self.constant(&Rational::zero())
    }

    fn one_like(&self) -> Self {
        self.constant(&Rational::one())
    }

    fn scale(&self, c: &Rational) -> Self {
        self.clone() * self.constant(c)
    }

    fn div(&self, other: &Self) -> Result<Self, EvalError> {
        Ok(self.clone() * other.recip()?)
    }

    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        Ok(pow_binary(base, n.unsigned_abs()))
    }
}

/// Square-and-multiply; every backend uses the same operation order.
pub fn pow_binary<S: Scalar>(base: S, mut e: u32) -> S {
    let mut acc = base.one_like();
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * sq.clone();
        }
        e >>= 1;
        if e > 0 {
            sq = sq.clone() * sq;
        }
    }
    acc
}

impl Scalar for f64 {
    fn constant(&self, c: &Rational) -> Self {
        rational_to_f64(c)
    }
    fn constant_f64(&self, c: f64) -> Self {
        c
    }
    fn real_part(&self) -> f64 {
        *self
    }
    fn recip(&self) -> Result<Self, EvalError> {
        if *self == 0.0 {
            Err(EvalError::DivisionByZero)
        } else {
            Ok(1.0 / self)
        }
    }
    fn sin(&self) -> Result<Self, EvalError> {
        Ok(f64::sin(*self))
    }
    fn cos(&self) -> Result<Self, EvalError> {
        Ok(f64::cos(*self))
    }
    fn exp(&self) -> Result<Self, EvalError> {
        Ok(f64::exp(*self))
    }
    fn ln(&self) -> Result<Self, EvalError> {
        if *self > 0.0 {
            Ok(f64::ln(*self))
        } else {
            Err(EvalError::Domain { op: "log", value: *self })
        }
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        if *self > 0.0 {
            Ok(f64::sqrt(*self))
        } else if *self == 0.0 {
            // sqrt is not differentiable at 0; the plain value is still fine
            Ok(0.0)
        } else {
            Err(EvalError::Domain { op: "sqrt", value: *self })
        }
    }
    fn atan2(&self, x: &Self) -> Result<Self, EvalError> {
        if *self == 0.0 && *x == 0.0 {
            Err(EvalError::Domain { op: "atan2", value: 0.0 })
        } else {
            Ok(f64::atan2(*self, *x))
        }
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for Rational {
    fn constant(&self, c: &Rational) -> Self {
        c.clone()
    }
    fn constant_f64(&self, c: f64) -> Self {
        Rational::from_float(c).unwrap_or_else(Rational::zero)
    }
    fn real_part(&self) -> f64 {
        rational_to_f64(self)
    }
    fn recip(&self) -> Result<Self, EvalError> {
        if self.is_zero() {
            Err(EvalError::DivisionByZero)
        } else {
            Ok(Rational::one() / self)
        }
    }
    fn sin(&self) -> Result<Self, EvalError> {
        Err(EvalError::NotRational("sin"))
    }
    fn cos(&self) -> Result<Self, EvalError> {
        Err(EvalError::NotRational("cos"))
    }
    fn exp(&self) -> Result<Self, EvalError> {
        Err(EvalError::NotRational("exp"))
    }
    fn ln(&self) -> Result<Self, EvalError> {
        Err(EvalError::NotRational("log"))
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        Err(EvalError::NotRational("sqrt"))
    }
    fn atan2(&self, _x: &Self) -> Result<Self, EvalError> {
        Err(EvalError::NotRational("atan2"))
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64 on its own
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p`, `p/q`, or a finite decimal such as `1.25` or `2e-3`
/// into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(digits.parse::<BigInt>().ok()?);
    let shift = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Some(if neg { -value } else { value })
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Which arithmetic a verifier ran on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rational,
    Float,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Rational => "rational",
            Backend::Float => "float",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rational" => Ok(Backend::Rational),
            "float" => Ok(Backend::Float),
            other => Err(format!("unknown backend `{other}` (expected rational|float)")),
        }
    }
}

/// Max-abs norm of a difference, as a float.
pub fn max_abs_diff<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).real_part().abs())
        .fold(0.0, f64::max)
}

/// Max-abs norm of an exact difference; `None` components never occur.
pub fn max_abs_diff_exact(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Serializes a rational as `"p/q"` (or `"p"`).
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).ok_or_else(|| D::Error::custom(format!("not a rational: {raw}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/2"), Some(rat(3, 2)));
        assert_eq!(parse_rational("-4"), Some(int(-4)));
        assert_eq!(parse_rational("0.125"), Some(rat(1, 8)));
        assert_eq!(parse_rational("2e-3"), Some(rat(1, 500)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn powi_handles_negative_exponents() {
        let x = rat(2, 3);
        assert_eq!(x.powi(3).unwrap(), rat(8, 27));
        assert_eq!(x.powi(-2).unwrap(), rat(9, 4));
        assert_eq!(x.powi(0).unwrap(), int(1));
        assert!(Rational::zero().powi(-1).is_err());
    }

    #[test]
    fn rational_backend_refuses_transcendentals() {
        assert_eq!(int(1).sin(), Err(EvalError::NotRational("sin")));
        assert!(f64::ln(-1.0).is_nan());
        assert!(Scalar::ln(&-1.0f64).is_err());
    }
}
