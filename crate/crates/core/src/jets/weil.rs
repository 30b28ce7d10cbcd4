//! Weil algebras `ℝ1 ⊕ N` given by structure constants, and their elements.
//!
//! Evaluating an expression over a [`WeilElement`] applies the Weil functor
//! of that algebra to the map: dual numbers give the tangent map, the tensor
//! square of the dual numbers gives the second tangent map, and so on.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};

use crate::error::{Error, EvalError, Result};
use crate::linalg::MatrixQ;
use crate::scalar::{int, pow_binary, rat, Rational, Scalar};

/// A finite-dimensional commutative unital algebra with a nilpotent
/// complement of the unit.
#[derive(Clone, PartialEq)]
pub struct WeilAlgebra {
    dim: usize,
    unit: usize,
    /// `constants[(i * dim + j) * dim + k]` is the coefficient of `e_k` in `e_i e_j`.
    constants: Vec<Rational>,
    products: Vec<Product>,
    nilpotency: usize,
    labels: Vec<String>,
}

#[derive(Clone, PartialEq, Debug)]
struct Product {
    i: usize,
    j: usize,
    k: usize,
    coeff: Coeff,
}

#[derive(Clone, PartialEq, Debug)]
enum Coeff {
    One,
    MinusOne,
    Other(Rational),
}

impl WeilAlgebra {
    /// Builds and validates an algebra. `constants[i][j][k]` is the
    /// coefficient of `e_k` in `e_i e_j`; `nilpotency` is the smallest `r`
    /// with `N^r = 0`.
    pub fn new(
        unit: usize,
        constants: Vec<Vec<Vec<Rational>>>,
        nilpotency: usize,
        labels: Vec<String>,
    ) -> Result<Self> {
        let dim = constants.len();
        if dim == 0 || unit >= dim {
            return Err(Error::InvalidAlgebra(format!("unit index {unit} out of range for dimension {dim}")));
        }
        if labels.len() != dim {
            return Err(Error::InvalidAlgebra("one label per basis element is required".into()));
        }
        let mut flat = Vec::with_capacity(dim * dim * dim);
        for (i, plane) in constants.iter().enumerate() {
            if plane.len() != dim || plane.iter().any(|row| row.len() != dim) {
                return Err(Error::InvalidAlgebra(format!("structure constants for e_{i} have the wrong shape")));
            }
            flat.extend(plane.iter().flatten().cloned());
        }
        let alg = Self::from_flat(dim, unit, flat, nilpotency, labels);
        alg.validate()?;
        Ok(alg)
    }

    fn from_flat(dim: usize, unit: usize, constants: Vec<Rational>, nilpotency: usize, labels: Vec<String>) -> Self {
        let mut products = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let c = &constants[(i * dim + j) * dim + k];
                    if c.is_zero() {
                        continue;
                    }
                    let coeff = if c.is_one() {
                        Coeff::One
                    } else if *c == -Rational::one() {
                        Coeff::MinusOne
                    } else {
                        Coeff::Other(c.clone())
                    };
                    products.push(Product { i, j, k, coeff });
                }
            }
        }
        WeilAlgebra {
            dim,
            unit,
            constants,
            products,
            nilpotency,
            labels,
        }
    }

    fn c(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.constants[(i * self.dim + j) * self.dim + k]
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        let u = self.unit;
        for j in 0..d {
            for k in 0..d {
                let want = if j == k { Rational::one() } else { Rational::zero() };
                if *self.c(u, j, k) != want || *self.c(j, u, k) != want {
                    return Err(Error::InvalidAlgebra(format!("unit does not act as identity on e_{j}")));
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if self.c(i, j, k) != self.c(j, i, k) {
                        return Err(Error::InvalidAlgebra(format!("e_{i} e_{j} != e_{j} e_{i}")));
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let lhs = (0..d).fold(Rational::zero(), |acc, m| acc + self.c(i, j, m) * self.c(m, k, l));
                        let rhs = (0..d).fold(Rational::zero(), |acc, m| acc + self.c(j, k, m) * self.c(i, m, l));
                        if lhs != rhs {
                            return Err(Error::InvalidAlgebra(format!("associativity fails on (e_{i}, e_{j}, e_{k})")));
                        }
                    }
                }
            }
        }
        for i in (0..d).filter(|&i| i != u) {
            for j in (0..d).filter(|&j| j != u) {
                if !self.c(i, j, u).is_zero() {
                    return Err(Error::InvalidAlgebra(format!(
                        "non-unit basis does not span an ideal: e_{i} e_{j} has a unit component"
                    )));
                }
            }
        }
        let computed = self.compute_nilpotency();
        if computed != self.nilpotency {
            return Err(Error::InvalidAlgebra(format!(
                "declared nilpotency degree {} but N^{} = 0 first",
                self.nilpotency, computed
            )));
        }
        Ok(())
    }

    /// Smallest `r` with `N^r = 0`, by spanning successive powers of the ideal.
    fn compute_nilpotency(&self) -> usize {
        let d = self.dim;
        let ideal: Vec<Vec<Rational>> = (0..d)
            .filter(|&i| i != self.unit)
            .map(|i| (0..d).map(|k| if k == i { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        let mut power = span_basis(ideal.clone());
        let mut r = 1;
        while !power.is_empty() {
            let mut next = Vec::new();
            for p in &power {
                for n in &ideal {
                    next.push(self.mul_coeffs(p, n));
                }
            }
            power = span_basis(next);
            r += 1;
        }
        r
    }

    fn mul_coeffs(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim];
        for (i, ai) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, bj) in b.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                for (k, slot) in out.iter_mut().enumerate() {
                    let c = self.c(i, j, k);
                    if !c.is_zero() {
                        *slot += ai * bj * c;
                    }
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unit_index(&self) -> usize {
        self.unit
    }

    pub fn nilpotency(&self) -> usize {
        self.nilpotency
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        self.c(i, j, k)
    }

    /// The algebra `ℝ` itself (no infinitesimals).
    pub fn trivial() -> Self {
        Self::from_flat(1, 0, vec![Rational::one()], 1, vec!["1".into()])
    }

    /// Truncated polynomials `ℝ[ε]/(ε^(order+1))`.
    pub fn truncated(order: usize) -> Self {
        let d = order + 1;
        let mut constants = vec![Rational::zero(); d * d * d];
        for i in 0..d {
            for j in 0..d {
                if i + j < d {
                    constants[(i * d + j) * d + i + j] = Rational::one();
                }
            }
        }
        let labels = (0..d)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "e".to_string(),
                _ => format!("e^{i}"),
            })
            .collect();
        Self::from_flat(d, 0, constants, d, labels)
    }

    /// Dual numbers `ℝ[ε]/(ε²)`.
    pub fn dual_numbers() -> Self {
        Self::truncated(1)
    }

    /// The tensor square of the dual numbers, basis `(1, ε₁, ε₂, ε₁ε₂)`.
    pub fn second_order() -> Self {
        let d = Self::dual_numbers();
        let mut t = tensor_algebra(&d, &d);
        // index i*2 + j is (left_i ⊗ right_j); ε₁ is the right factor
        t.labels = vec!["1".into(), "e1".into(), "e2".into(), "e1e2".into()];
        t
    }

    /// First-order jets in `m` directions: `ε_i ε_j = 0` for all `i, j`.
    pub fn first_order(m: usize) -> Self {
        let d = m + 1;
        let mut constants = vec![Rational::zero(); d * d * d];
        for i in 0..d {
            constants[i * d + i] = Rational::one();
            constants[(i * d) * d + i] = Rational::one();
        }
        let labels = std::iter::once("1".to_string()).chain((1..d).map(|i| format!("e{i}"))).collect();
        Self::from_flat(d, 0, constants, if m == 0 { 1 } else { 2 }, labels)
    }

    pub fn element<T: Scalar>(self: &Arc<Self>, coeffs: Vec<T>) -> Result<WeilElement<T>, EvalError> {
        if coeffs.len() != self.dim {
            return Err(EvalError::Arity {
                expected: self.dim,
                got: coeffs.len(),
            });
        }
        Ok(WeilElement {
            alg: Arc::clone(self),
            coeffs,
        })
    }

    /// `value · 1`.
    pub fn scalar<T: Scalar>(self: &Arc<Self>, value: T) -> WeilElement<T> {
        let zero = value.zero_like();
        let mut coeffs = vec![zero; self.dim];
        coeffs[self.unit] = value;
        WeilElement {
            alg: Arc::clone(self),
            coeffs,
        }
    }

    /// `value · 1 + Σ direction_k e_k` over the listed basis indices.
    pub fn point<T: Scalar>(self: &Arc<Self>, value: T, parts: &[(usize, T)]) -> WeilElement<T> {
        let mut e = self.scalar(value);
        for (k, c) in parts {
            e.coeffs[*k] = c.clone();
        }
        e
    }
}

impl fmt::Debug for WeilAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeilAlgebra")
            .field("dim", &self.dim)
            .field("unit", &self.unit)
            .field("nilpotency", &self.nilpotency)
            .field("labels", &self.labels)
            .finish()
    }
}

fn span_basis(vectors: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    if vectors.is_empty() {
        return vectors;
    }
    let m = MatrixQ::from_rows(vectors).expect("uniform vector length");
    let (r, pivots) = m.rref();
    (0..pivots.len()).map(|i| r.row(i).to_vec()).collect()
}

/// `A ⊗ B`, basis `a_i ⊗ b_j` at index `i * dim(B) + j`.
pub fn tensor_algebra(a: &WeilAlgebra, b: &WeilAlgebra) -> WeilAlgebra {
    let (da, db) = (a.dim, b.dim);
    let d = da * db;
    let mut constants = vec![Rational::zero(); d * d * d];
    for pa in &a.products {
        for pb in &b.products {
            let i = pa.i * db + pb.i;
            let j = pa.j * db + pb.j;
            let k = pa.k * db + pb.k;
            constants[(i * d + j) * d + k] = a.c(pa.i, pa.j, pa.k) * b.c(pb.i, pb.j, pb.k);
        }
    }
    let mut labels = Vec::with_capacity(d);
    for la in &a.labels {
        for lb in &b.labels {
            labels.push(match (la.as_str(), lb.as_str()) {
                ("1", "1") => "1".to_string(),
                ("1", _) => format!("1⊗{lb}"),
                (_, "1") => format!("{la}⊗1"),
                _ => format!("{la}⊗{lb}"),
            });
        }
    }
    let unit = a.unit * db + b.unit;
    let nilpotency = a.nilpotency + b.nilpotency - 1;
    let alg = WeilAlgebra::from_flat(d, unit, constants, nilpotency, labels);
    debug_assert!(alg.validate().is_ok());
    alg
}

pub fn dual() -> &'static Arc<WeilAlgebra> {
    static DUAL: OnceLock<Arc<WeilAlgebra>> = OnceLock::new();
    DUAL.get_or_init(|| Arc::new(WeilAlgebra::dual_numbers()))
}

pub fn second_order() -> &'static Arc<WeilAlgebra> {
    static T2: OnceLock<Arc<WeilAlgebra>> = OnceLock::new();
    T2.get_or_init(|| Arc::new(WeilAlgebra::second_order()))
}

/// Shared first-order jet algebra in `m` directions.
pub fn first_order(m: usize) -> Arc<WeilAlgebra> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<WeilAlgebra>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    Arc::clone(guard.entry(m).or_insert_with(|| Arc::new(WeilAlgebra::first_order(m))))
}

/// An element `λ1 + n` of a Weil algebra over the base scalar `T`.
#[derive(Clone)]
pub struct WeilElement<T> {
    alg: Arc<WeilAlgebra>,
    coeffs: Vec<T>,
}

impl<T: Scalar> WeilElement<T> {
    pub fn algebra(&self) -> &Arc<WeilAlgebra> {
        &self.alg
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn scalar_part(&self) -> &T {
        &self.coeffs[self.alg.unit]
    }

    pub fn nilpotent_part(&self) -> Self {
        let mut n = self.clone();
        n.coeffs[self.alg.unit] = n.coeffs[self.alg.unit].zero_like();
        n
    }

    fn same_algebra(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg
    }

    fn embed(&self, value: T) -> Self {
        self.alg.scalar(value)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, EvalError> {
        if !self.same_algebra(other) {
            return Err(EvalError::AlgebraMismatch);
        }
        Ok(WeilElement {
            alg: Arc::clone(&self.alg),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }

    /// Product through the structure constants.
    pub fn try_mul(&self, other: &Self) -> Result<Self, EvalError> {
        if !self.same_algebra(other) {
            return Err(EvalError::AlgebraMismatch);
        }
        let zero = self.coeffs[0].zero_like();
        let mut out = vec![zero; self.alg.dim];
        for p in &self.alg.products {
            let a = &self.coeffs[p.i];
            let b = &other.coeffs[p.j];
            if a.is_exact_zero() || b.is_exact_zero() {
                continue;
            }
            let term = a.clone() * b.clone();
            let term = match &p.coeff {
                Coeff::One => term,
                Coeff::MinusOne => -term,
                Coeff::Other(c) => term.scale(c),
            };
            out[p.k] = out[p.k].clone() + term;
        }
        Ok(WeilElement {
            alg: Arc::clone(&self.alg),
            coeffs: out,
        })
    }

    /// `Σ_{k<r} c_k n^k` for the nilpotent part `n`, by Horner's rule.
    fn horner(&self, coeffs: &[T]) -> Self {
        let n = self.nilpotent_part();
        let mut acc = self.embed(coeffs[coeffs.len() - 1].clone());
        for c in coeffs[..coeffs.len() - 1].iter().rev() {
            acc = acc * n.clone() + self.embed(c.clone());
        }
        acc
    }
}

/// Unary primitives with closed-form Taylor coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Recip,
    Pow(i32),
}

/// `f⁽ᵏ⁾(λ)/k!` for `k < order`.
fn taylor_coefficients<T: Scalar>(f: Primitive, lambda: &T, order: usize) -> Result<Vec<T>, EvalError> {
    let mut out = Vec::with_capacity(order);
    let fact = |k: usize| -> Rational { (1..=k as i64).fold(Rational::one(), |acc, i| acc * int(i)) };
    match f {
        Primitive::Exp => {
            let e = lambda.exp()?;
            for k in 0..order {
                out.push(e.scale(&(Rational::one() / fact(k))));
            }
        }
        Primitive::Sin | Primitive::Cos => {
            let (s, c) = (lambda.sin()?, lambda.cos()?);
            let cycle = if f == Primitive::Sin {
                [s.clone(), c.clone(), -s, -c]
            } else {
                [c.clone(), -s.clone(), -c, s]
            };
            for k in 0..order {
                out.push(cycle[k % 4].scale(&(Rational::one() / fact(k))));
            }
        }
        Primitive::Log => {
            out.push(lambda.ln()?);
            if order > 1 {
                let inv = lambda.recip().map_err(|_| EvalError::Domain {
                    op: "log",
                    value: lambda.real_part(),
                })?;
                let mut p = inv.clone();
                for k in 1..order {
                    let sign = if k % 2 == 1 { 1 } else { -1 };
                    out.push(p.scale(&rat(sign, k as i64)));
                    p = p * inv.clone();
                }
            }
        }
        Primitive::Sqrt => {
            let s = lambda.sqrt()?;
            out.push(s.clone());
            if order > 1 {
                let inv = lambda.recip().map_err(|_| EvalError::Domain {
                    op: "sqrt",
                    value: lambda.real_part(),
                })?;
                let mut binom = Rational::one();
                let mut p = s;
                for k in 1..order {
                    // binom(1/2, k) = binom(1/2, k-1) * (1/2 - k + 1) / k
                    binom = binom * (rat(1, 2) - int(k as i64 - 1)) / int(k as i64);
                    p = p * inv.clone();
                    out.push(p.scale(&binom));
                }
            }
        }
        Primitive::Recip => {
            let inv = lambda.recip()?;
            let mut p = inv.clone();
            for k in 0..order {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                out.push(p.scale(&int(sign)));
                p = p * inv.clone();
            }
        }
        Primitive::Pow(n) => {
            let mut binom = Rational::one();
            for k in 0..order {
                if k > 0 {
                    binom = binom * (int(n as i64) - int(k as i64 - 1)) / int(k as i64);
                }
                if binom.is_zero() {
                    out.push(lambda.zero_like());
                } else {
                    out.push(lambda.powi(n - k as i32)?.scale(&binom));
                }
            }
        }
    }
    Ok(out)
}

/// The Weil lift `T_A f(λ1 + n) = Σ f⁽ⁱ⁾(λ)/i! nⁱ`, a finite sum since `n` is nilpotent.
pub fn taylor_lift<T: Scalar>(f: Primitive, a: &WeilElement<T>) -> Result<WeilElement<T>, EvalError> {
    let coeffs = taylor_coefficients(f, a.scalar_part(), a.alg.nilpotency)?;
    Ok(a.horner(&coeffs))
}

impl<T: Scalar> fmt::Debug for WeilElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .zip(&self.alg.labels)
            .map(|(c, l)| format!("{c:?}·{l}"))
            .collect();
        write!(f, "W({})", parts.join(" + "))
    }
}

impl<T: Scalar> PartialEq for WeilElement<T>
where
    T: PartialEq,
{
    fn eq(&self, other: &Self) -> bool {
        self.same_algebra(other) && self.coeffs == other.coeffs
    }
}

// The operator impls panic on mismatched algebras; `try_add`/`try_mul`
// report the mismatch instead.
impl<T: Scalar> Add for WeilElement<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.try_add(&rhs).expect("weil algebra mismatch")
    }
}

impl<T: Scalar> Sub for WeilElement<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.try_add(&-rhs).expect("weil algebra mismatch")
    }
}

impl<T: Scalar> Mul for WeilElement<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(&rhs).expect("weil algebra mismatch")
    }
}

impl<T: Scalar> Neg for WeilElement<T> {
    type Output = Self;
    fn neg(self) -> Self {
        WeilElement {
            alg: self.alg,
            coeffs: self.coeffs.into_iter().map(Neg::neg).collect(),
        }
    }
}

impl<T: Scalar> Scalar for WeilElement<T> {
    fn constant(&self, c: &Rational) -> Self {
        self.embed(self.coeffs[0].constant(c))
    }

    fn constant_f64(&self, c: f64) -> Self {
        self.embed(self.coeffs[0].constant_f64(c))
    }

    fn real_part(&self) -> f64 {
        self.scalar_part().real_part()
    }

    fn recip(&self) -> Result<Self, EvalError> {
        taylor_lift(Primitive::Recip, self)
    }

    fn sin(&self) -> Result<Self, EvalError> {
        taylor_lift(Primitive::Sin, self)
    }

    fn cos(&self) -> Result<Self, EvalError> {
        taylor_lift(Primitive::Cos, self)
    }

    fn exp(&self) -> Result<Self, EvalError> {
        taylor_lift(Primitive::Exp, self)
    }

    fn ln(&self) -> Result<Self, EvalError> {
        taylor_lift(Primitive::Log, self)
    }

    fn sqrt(&self) -> Result<Self, EvalError> {
        taylor_lift(Primitive::Sqrt, self)
    }

    fn atan2(&self, x: &Self) -> Result<Self, EvalError> {
        if !self.same_algebra(x) {
            return Err(EvalError::AlgebraMismatch);
        }
        // atan2(y, x) = θ₀ + atan(w), w = (x₀y − y₀x)/(x₀x + y₀y) has zero scalar part
        let (y0, x0) = (self.scalar_part().clone(), x.scalar_part().clone());
        let theta0 = y0.atan2(&x0)?;
        let num = self.embed(x0.clone()) * self.clone() - self.embed(y0.clone()) * x.clone();
        let den = self.embed(x0) * x.clone() + self.embed(y0) * self.clone();
        let w = num.nilpotent_part() * den.recip()?;
        let mut atan = w.zero_like();
        let w2 = w.clone() * w.clone();
        let mut p = w;
        let mut k = 0i64;
        while 2 * (k as usize) + 1 < self.alg.nilpotency {
            atan = atan + p.scale(&rat(if k % 2 == 0 { 1 } else { -1 }, 2 * k + 1));
            p = p * w2.clone();
            k += 1;
        }
        Ok(self.embed(theta0) + atan)
    }

    fn is_exact_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_exact_zero)
    }

    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        if n >= 0 {
            Ok(pow_binary(self.clone(), n as u32))
        } else {
            taylor_lift(Primitive::Pow(n), self)
        }
    }
}
