//! Algebras over the tangent monad: maps `h: TM → M` with `h(x, 0) = x` and
//! `h(h(x,v), h′(x,v)(ẋ,v̇)) = h(x, v + ẋ)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, EvalError, Result};
use crate::flows::Rank1;
use crate::jets::{first_order, ChartMap, DomainBox, Expr};
use crate::linalg::{distance_to_span, image_basis, numerical_rank, MatrixQ};
use crate::monad::{sub, tangent_lift};
use crate::report::{Check, Report};
use crate::sampling::{self, run_sampled, sampled_check, snap_all};
use crate::scalar::{Backend, Rational, Scalar};

pub const TOL_POLY: f64 = 1e-12;
pub const TOL_TRANSCENDENTAL: f64 = 1e-9;
pub const NILPOTENCY_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-6;
pub const NIJENHUIS_TOL: f64 = 1e-9;
const FIBER_BOUND: f64 = 1e9;

/// Sampling settings shared by the algebra checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    /// `None` picks rational for polynomial algebras, float otherwise.
    pub backend: Option<Backend>,
    pub tolerance: Option<f64>,
    /// Fiber samples are drawn from a ball of this fraction of the
    /// domain's smallest half-width.
    pub radius_fraction: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            samples: 200,
            seed: sampling::DEFAULT_SEED,
            backend: None,
            tolerance: None,
            radius_fraction: 0.25,
        }
    }
}

impl SampleConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        SampleConfig {
            samples,
            seed,
            ..Default::default()
        }
    }
}

/// Evaluation is refused unless `expr(x, v) < below`.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub expr: Expr,
    pub below: f64,
    text: String,
}

impl Guard {
    pub fn parse(src: &str, below: f64, names: &[String]) -> Result<Guard> {
        let expr = Expr::parse(src, names)?;
        Ok(Guard {
            text: expr.display(names).to_string(),
            expr,
            below,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn check<S: Scalar>(&self, args: &[S]) -> Result<(), EvalError> {
        let value = self.expr.eval(args)?.real_part();
        if value < self.below {
            Ok(())
        } else {
            Err(EvalError::Guard {
                expr: self.text.clone(),
                value,
                bound: self.below,
            })
        }
    }

    fn remap(&self, images: &[Expr], names: &[String]) -> Guard {
        let expr = self.expr.substitute(images);
        Guard {
            text: expr.display(names).to_string(),
            expr,
            below: self.below,
        }
    }
}

/// A matrix-valued field `x ↦ A(x)` given by `n²` expressions in `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    n: usize,
    chart: ChartMap,
}

impl MatrixField {
    pub fn new(entries: Vec<Vec<Expr>>, domain: DomainBox) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("a matrix field must be square and nonempty".into()));
        }
        let chart = ChartMap::new(ChartMap::indexed_names("x", n), entries.concat(), domain)?;
        Ok(MatrixField { n, chart })
    }

    pub fn parse(rows: &[&[&str]], domain: DomainBox) -> Result<Self> {
        let names = ChartMap::indexed_names("x", rows.len());
        let entries = rows
            .iter()
            .map(|r| r.iter().map(|s| Expr::parse(s, &names)).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(entries, domain)
    }

    pub fn constant(a: &MatrixQ, domain: DomainBox) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape(format!("{}x{} matrix is not square", a.rows(), a.cols())));
        }
        let entries = a.to_rows().into_iter().map(|r| r.into_iter().map(Expr::rational).collect()).collect();
        Self::new(entries, domain)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &DomainBox {
        self.chart.domain()
    }

    pub fn is_rational(&self) -> bool {
        self.chart.is_rational()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.chart.exprs()[i * self.n + j]
    }

    pub fn entry_strings(&self) -> Vec<Vec<String>> {
        self.chart.expr_strings().chunks(self.n).map(<[String]>::to_vec).collect()
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<Vec<S>>, EvalError> {
        Ok(self.chart.eval_unchecked(x)?.chunks(self.n).map(<[S]>::to_vec).collect())
    }

    /// `A(x)` and `∂ₖA(x)` for every coordinate `k`.
    pub fn with_derivatives<S: Scalar>(&self, x: &[S]) -> Result<(Vec<Vec<S>>, Vec<Vec<Vec<S>>>), EvalError> {
        let n = self.n;
        let alg = first_order(n);
        let pts: Vec<_> = x
            .iter()
            .enumerate()
            .map(|(k, xk)| alg.point(xk.clone(), &[(k + 1, xk.one_like())]))
            .collect();
        let out = self.chart.eval_unchecked(&pts)?;
        let value = (0..n).map(|r| (0..n).map(|c| out[r * n + c].scalar_part().clone()).collect()).collect();
        let derivs = (0..n)
            .map(|k| (0..n).map(|r| (0..n).map(|c| out[r * n + c].coeff(k + 1).clone()).collect()).collect())
            .collect();
        Ok((value, derivs))
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Chart(ChartMap),
    Rank1(Arc<Rank1>),
    Product(Box<AlgebraMap>, Box<AlgebraMap>),
}

/// A candidate algebra `h(x, v)` on a chart domain of `ℝⁿ`.
#[derive(Debug, Clone)]
pub struct AlgebraMap {
    name: String,
    dim: usize,
    kind: Kind,
    domain: DomainBox,
    periodic: Vec<Option<f64>>,
    guards: Vec<Guard>,
    field: Option<MatrixField>,
    tolerance: Option<f64>,
}

/// Input names `x1..xn, v1..vn` used by algebra charts.
pub fn algebra_input_names(n: usize) -> Vec<String> {
    [ChartMap::indexed_names("x", n), ChartMap::indexed_names("v", n)].concat()
}

fn fiber_domain(domain: &DomainBox) -> DomainBox {
    domain.product(&DomainBox::cube(domain.dim(), -FIBER_BOUND, FIBER_BOUND))
}

impl AlgebraMap {
    /// An algebra from `n` expressions in `x1..xn, v1..vn`.
    pub fn from_exprs(name: impl Into<String>, exprs: Vec<Expr>, domain: DomainBox) -> Result<Self> {
        let n = domain.dim();
        if exprs.len() != n {
            return Err(Error::Shape(format!("{} outputs for a {n}-dimensional domain", exprs.len())));
        }
        let chart = ChartMap::new(algebra_input_names(n), exprs, fiber_domain(&domain))?;
        Ok(AlgebraMap {
            name: name.into(),
            dim: n,
            kind: Kind::Chart(chart),
            domain,
            periodic: vec![None; n],
            guards: Vec::new(),
            field: None,
            tolerance: None,
        })
    }

    pub fn parse(name: impl Into<String>, exprs: &[&str], domain: DomainBox) -> Result<Self> {
        let names = algebra_input_names(domain.dim());
        let parsed = exprs
            .iter()
            .map(|s| Expr::parse(s, &names))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_exprs(name, parsed, domain)
    }

    pub(crate) fn from_rank1(name: impl Into<String>, r: Rank1) -> Self {
        let domain = r.domain().clone();
        let n = domain.dim();
        AlgebraMap {
            name: name.into(),
            dim: n,
            kind: Kind::Rank1(Arc::new(r)),
            domain,
            periodic: vec![None; n],
            guards: Vec::new(),
            field: None,
            tolerance: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_periodic(mut self, periodic: Vec<Option<f64>>) -> Result<Self> {
        if periodic.len() != self.dim {
            return Err(Error::Shape(format!("{} periods for dimension {}", periodic.len(), self.dim)));
        }
        if periodic.iter().flatten().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Spec("periods must be finite and positive".into()));
        }
        self.periodic = periodic;
        Ok(self)
    }

    pub fn with_guard(mut self, src: &str, below: f64) -> Result<Self> {
        self.guards.push(Guard::parse(src, below, &algebra_input_names(self.dim))?);
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_field(mut self, field: MatrixField) -> Result<Self> {
        if field.dim() != self.dim {
            return Err(Error::Shape("matrix field dimension differs from the algebra's".into()));
        }
        self.field = Some(field);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn periodic(&self) -> &[Option<f64>] {
        &self.periodic
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    /// The matrix field `A(x)` of a semi-affine algebra `x + A(x)v`.
    pub fn field(&self) -> Option<&MatrixField> {
        self.field.as_ref()
    }

    pub fn chart(&self) -> Option<&ChartMap> {
        match &self.kind {
            Kind::Chart(c) => Some(c),
            _ => None,
        }
    }

    pub fn rank1(&self) -> Option<&Rank1> {
        match &self.kind {
            Kind::Rank1(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        match &self.kind {
            Kind::Chart(c) => c.is_rational() && self.guards.iter().all(|g| g.expr.is_rational()),
            Kind::Rank1(_) => false,
            Kind::Product(a, b) => a.is_rational() && b.is_rational(),
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        if let Some(t) = self.tolerance {
            return t;
        }
        match &self.kind {
            Kind::Chart(c) if c.is_rational() => TOL_POLY,
            Kind::Chart(_) => TOL_TRANSCENDENTAL,
            Kind::Rank1(r) => r.tolerance(),
            Kind::Product(a, b) => a.default_tolerance().max(b.default_tolerance()),
        }
    }

    pub fn backend_for(&self, requested: Option<Backend>) -> Result<Backend> {
        match requested {
            Some(Backend::Rational) if !self.is_rational() => Err(Error::Backend(format!(
                "rational (algebra `{}` is not polynomial with rational coefficients)",
                self.name
            ))),
            Some(b) => Ok(b),
            None if self.is_rational() => Ok(Backend::Rational),
            None => Ok(Backend::Float),
        }
    }

    fn check_domain<S: Scalar>(&self, x: &[S]) -> Result<(), EvalError> {
        let inside = x.iter().enumerate().all(|(i, xi)| {
            let r = xi.real_part();
            self.periodic[i].is_some() || (self.domain.min[i] <= r && r <= self.domain.max[i])
        });
        if inside {
            Ok(())
        } else {
            Err(EvalError::OutsideDomain(x.iter().map(Scalar::real_part).collect()))
        }
    }

    /// `h(x, v)`. Non-periodic coordinates of `x` must lie in the domain.
    pub fn apply<S: Scalar>(&self, x: &[S], v: &[S]) -> Result<Vec<S>, EvalError> {
        let n = self.dim;
        if x.len() != n || v.len() != n {
            return Err(EvalError::Arity {
                expected: n,
                got: if x.len() != n { x.len() } else { v.len() },
            });
        }
        self.check_domain(x)?;
        match &self.kind {
            Kind::Chart(c) => {
                let args = [x, v].concat();
                for g in &self.guards {
                    g.check(&args)?;
                }
                c.eval_unchecked(&args)
            }
            Kind::Rank1(r) => r.apply(x, v),
            Kind::Product(a, b) => {
                let m = a.dim;
                let mut out = a.apply(&x[..m], &v[..m])?;
                out.extend(b.apply(&x[m..], &v[m..])?);
                Ok(out)
            }
        }
    }

    /// `Th(x, v, ẋ, v̇) = (h(x,v), h′(x,v)(ẋ,v̇))` on the flat layout.
    pub fn tangent<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, EvalError> {
        let n = self.dim;
        tangent_lift(|a| self.apply(&a[..n], &a[n..]), p)
    }

    /// Reduces periodic components of a difference to `(-P/2, P/2]`.
    pub fn wrap<S: Scalar>(&self, d: Vec<S>) -> Vec<S> {
        d.into_iter()
            .zip(&self.periodic)
            .map(|(di, p)| match p {
                Some(p) => {
                    let k = (di.real_part() / p).round();
                    if k != 0.0 {
                        let shift = di.constant_f64(k * p);
                        di - shift
                    } else {
                        di
                    }
                }
                None => di,
            })
            .collect()
    }

    /// `(h(x,v), ∂h/∂v (x,v))` by first-order jets in the fiber directions.
    pub fn fiber_jacobian<S: Scalar>(&self, x: &[S], v: &[S]) -> Result<(Vec<S>, Vec<Vec<S>>), EvalError> {
        let n = self.dim;
        let alg = first_order(n);
        let xs: Vec<_> = x.iter().map(|xi| alg.scalar(xi.clone())).collect();
        let vs: Vec<_> = v
            .iter()
            .enumerate()
            .map(|(j, vj)| alg.point(vj.clone(), &[(j + 1, vj.one_like())]))
            .collect();
        let out = self.apply(&xs, &vs)?;
        let values = out.iter().map(|o| o.scalar_part().clone()).collect();
        let jac = out.iter().map(|o| (1..=n).map(|j| o.coeff(j).clone()).collect()).collect();
        Ok((values, jac))
    }

    /// `A_x = h_x′(0)`.
    pub fn endomorphism<S: Scalar>(&self, x: &[S]) -> Result<Vec<Vec<S>>, EvalError> {
        let zeros: Vec<S> = x.iter().map(Scalar::zero_like).collect();
        Ok(self.fiber_jacobian(x, &zeros)?.1)
    }

    fn unit_residual<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>, EvalError> {
        let zeros: Vec<S> = x.iter().map(Scalar::zero_like).collect();
        Ok(self.wrap(sub(&self.apply(x, &zeros)?, x)))
    }

    fn action_residual<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, EvalError> {
        let n = self.dim;
        let th = self.tangent(p)?;
        let lhs = self.apply(&th[..n], &th[n..])?;
        let vx: Vec<S> = (0..n).map(|i| p[n + i].clone() + p[2 * n + i].clone()).collect();
        let rhs = self.apply(&p[..n], &vx)?;
        Ok(self.wrap(sub(&lhs, &rhs)))
    }

    fn fiber_radius(&self, cfg: &SampleConfig) -> f64 {
        cfg.radius_fraction * self.domain.half_width()
    }

    /// Base point followed by `k` fiber vectors.
    fn sample_point(&self, rng: &mut ChaCha8Rng, radius: f64, k: usize) -> Vec<f64> {
        let mut p = sampling::uniform_box(rng, &self.domain);
        for _ in 0..k {
            p.extend(sampling::uniform_ball(rng, self.dim, radius));
        }
        p
    }

    /// Spec form for chart-backed algebras (rank-1 algebras serialize
    /// through their own spec).
    pub fn to_spec(&self) -> Result<AlgebraSpec> {
        let chart = self
            .chart()
            .ok_or_else(|| Error::Spec(format!("algebra `{}` has no closed-form chart", self.name)))?;
        Ok(AlgebraSpec {
            name: Some(self.name.clone()),
            dim: self.dim,
            exprs: chart.expr_strings(),
            domain: self.domain.clone(),
            periodic: self.periodic.clone(),
            tolerance: self.tolerance,
            guards: self
                .guards
                .iter()
                .map(|g| GuardSpec {
                    expr: g.text.clone(),
                    below: g.below,
                })
                .collect(),
            field: self.field.as_ref().map(MatrixField::entry_strings),
        })
    }

    pub fn from_spec(spec: &AlgebraSpec) -> Result<Self> {
        spec.domain.validate()?;
        if spec.domain.dim() != spec.dim {
            return Err(Error::Spec(format!("dim is {} but the domain has dimension {}", spec.dim, spec.domain.dim())));
        }
        let exprs: Vec<&str> = spec.exprs.iter().map(String::as_str).collect();
        let mut h = AlgebraMap::parse(spec.name.clone().unwrap_or_else(|| "algebra".into()), &exprs, spec.domain.clone())?;
        if !spec.periodic.is_empty() {
            h = h.with_periodic(spec.periodic.clone())?;
        }
        for g in &spec.guards {
            h = h.with_guard(&g.expr, g.below)?;
        }
        if let Some(t) = spec.tolerance {
            h = h.with_tolerance(t);
        }
        if let Some(rows) = &spec.field {
            let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
            let refs: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
            h = h.with_field(MatrixField::parse(&refs, spec.domain.clone())?)?;
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardSpec {
    pub expr: String,
    pub below: f64,
}

/// JSON form of a closed-form algebra; expressions use `x1..xn, v1..vn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub exprs: Vec<String>,
    pub domain: DomainBox,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periodic: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guards: Vec<GuardSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<Vec<String>>>,
}

/// `h(x, v) = x`.
pub fn make_trivial(n: usize) -> Result<AlgebraMap> {
    let domain = DomainBox::cube(n, -2.0, 2.0);
    let h = AlgebraMap::from_exprs("trivial", (0..n).map(Expr::var).collect(), domain.clone())?;
    h.with_field(MatrixField::constant(&MatrixQ::zeros(n, n), domain)?)
}

/// The free algebra `μ` on `TB`: `h((x,v),(ẋ,v̇)) = (x, v + ẋ)`, with `x`
/// ranging over `base` and `v` over a cube of the same size.
pub fn make_free(base: &DomainBox) -> Result<AlgebraMap> {
    base.validate()?;
    let n = base.dim();
    let half = base.half_width().max(1.0);
    let domain = base.product(&DomainBox::cube(n, -half, half));
    let m = 2 * n;
    let exprs = (0..m)
        .map(|i| if i < n { Expr::var(i) } else { Expr::var(i) + Expr::var(m + i - n) })
        .collect();
    let a = MatrixQ::from_fn(m, m, |i, j| {
        if i >= n && j + n == i {
            Rational::from_integer(1.into())
        } else {
            Rational::zero()
        }
    });
    AlgebraMap::from_exprs("free", exprs, domain.clone())?.with_field(MatrixField::constant(&a, domain)?)
}

/// `h(x, v) = x + Av` on `[-10, 10]ⁿ`. Any square `A` is accepted.
pub fn make_affine(a: &MatrixQ) -> Result<AlgebraMap> {
    let domain = DomainBox::cube(a.rows(), -10.0, 10.0);
    let field = MatrixField::constant(a, domain)?;
    Ok(make_semi_affine(field)?.with_name(format!("affine {a}")))
}

/// `h(x, v) = x + A(x)v`.
pub fn make_semi_affine(field: MatrixField) -> Result<AlgebraMap> {
    let n = field.dim();
    let exprs = (0..n)
        .map(|i| {
            (0..n).fold(Expr::var(i), |acc, j| {
                let a = field.entry(i, j);
                if is_zero_expr(a) {
                    acc
                } else {
                    acc + a.clone() * Expr::var(n + j)
                }
            })
        })
        .collect();
    AlgebraMap::from_exprs("semi-affine", exprs, field.domain().clone())?.with_field(field)
}

fn is_zero_expr(e: &Expr) -> bool {
    matches!(e, Expr::Const(crate::jets::expr::Constant::Exact(r)) if r.is_zero())
}

/// `(h × k)((x,y),(v,w)) = (h(x,v), k(y,w))`.
pub fn make_product(h: &AlgebraMap, k: &AlgebraMap) -> Result<AlgebraMap> {
    let (n, m) = (h.dim, k.dim);
    let domain = h.domain.product(&k.domain);
    let periodic = [h.periodic.clone(), k.periodic.clone()].concat();
    let name = format!("{} x {}", h.name, k.name);
    let tolerance = match (h.tolerance, k.tolerance) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0.0).max(b.unwrap_or(0.0))),
    };
    let (Some(ch), Some(ck)) = (h.chart(), k.chart()) else {
        return Ok(AlgebraMap {
            name,
            dim: n + m,
            kind: Kind::Product(Box::new(h.clone()), Box::new(k.clone())),
            domain,
            periodic,
            guards: Vec::new(),
            field: None,
            tolerance,
        });
    };
    let names = algebra_input_names(n + m);
    let from_h: Vec<Expr> = (0..2 * n).map(|i| Expr::var(if i < n { i } else { n + m + i - n })).collect();
    let from_k: Vec<Expr> = (0..2 * m).map(|j| Expr::var(if j < m { n + j } else { 2 * n + m + j - m })).collect();
    let exprs = ch
        .exprs()
        .iter()
        .map(|e| e.substitute(&from_h))
        .chain(ck.exprs().iter().map(|e| e.substitute(&from_k)))
        .collect();
    let mut out = AlgebraMap::from_exprs(name, exprs, domain.clone())?.with_periodic(periodic)?;
    out.guards = h
        .guards
        .iter()
        .map(|g| g.remap(&from_h, &names))
        .chain(k.guards.iter().map(|g| g.remap(&from_k, &names)))
        .collect();
    out.tolerance = tolerance;
    if let (Some(fh), Some(fk)) = (&h.field, &k.field) {
        let xs_k: Vec<Expr> = (0..m).map(|j| Expr::var(n + j)).collect();
        let entries = (0..n + m)
            .map(|i| {
                (0..n + m)
                    .map(|j| match (i < n, j < n) {
                        (true, true) => fh.entry(i, j).clone(),
                        (false, false) => fk.entry(i - n, j - n).substitute(&xs_k),
                        _ => Expr::zero(),
                    })
                    .collect()
            })
            .collect();
        out.field = Some(MatrixField::new(entries, domain)?);
    }
    Ok(out)
}

/// Checks `h(x,0) = x` and `h∘Th = h∘μ` on seeded samples.
pub fn check_axioms(h: &AlgebraMap, cfg: &SampleConfig) -> Result<Report> {
    let backend = h.backend_for(cfg.backend)?;
    let tol = match backend {
        Backend::Rational => 0.0,
        Backend::Float => cfg.tolerance.unwrap_or_else(|| h.default_tolerance()),
    };
    let radius = h.fiber_radius(cfg);
    let (unit, action) = with_backend!(backend, S => {
        let unit = sampled_check::<S, _, _>(
            "unit",
            backend,
            tol,
            cfg.samples,
            cfg.seed,
            |r| sampling::uniform_box(r, &h.domain),
            |x| h.unit_residual(x),
        )?;
        let action = sampled_check::<S, _, _>(
            "action",
            backend,
            tol,
            cfg.samples,
            cfg.seed.wrapping_add(1),
            |r| h.sample_point(r, radius, 3),
            |p| h.action_residual(p),
        )?;
        (unit, action)
    });
    Ok(Report::new(h.name.clone(), vec![unit, action]).with_details(json!({
        "dim": h.dim,
        "fiber_radius": radius,
    })))
}

fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn endomorphism_at(h: &AlgebraMap, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(to_dmatrix(&h.endomorphism(x)?))
}

/// Exact `A_x` for rational algebras.
pub fn endomorphism_exact(h: &AlgebraMap, x: &[Rational]) -> Result<MatrixQ> {
    h.backend_for(Some(Backend::Rational))?;
    MatrixQ::from_rows(h.endomorphism(x)?)
}

/// Rank of `A_x`: exact for rational algebras, otherwise with the relative
/// singular-value threshold.
pub fn rank_at(h: &AlgebraMap, x: &[f64]) -> Result<usize> {
    Ok(rank_of(h, x)?)
}

fn rank_of(h: &AlgebraMap, x: &[f64]) -> Result<usize, EvalError> {
    let n = h.dim;
    if h.is_rational() {
        let q = x
            .iter()
            .map(|v| Rational::from_float(*v).ok_or(EvalError::Domain { op: "exact conversion", value: *v }))
            .collect::<Result<Vec<_>, _>>()?;
        let a = h.endomorphism(&q)?;
        Ok(MatrixQ::from_fn(n, n, |i, j| a[i][j].clone()).rank())
    } else {
        Ok(numerical_rank(&to_dmatrix(&h.endomorphism(x)?)))
    }
}

/// Orthonormal basis of `D_x = im A_x`, as columns.
pub fn distribution_at(h: &AlgebraMap, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(image_basis(&endomorphism_at(h, x)?))
}

fn mat_mul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Vec<Vec<S>> {
    let inner = b.len();
    a.iter()
        .map(|row| {
            (0..b.first().map_or(0, Vec::len))
                .map(|j| {
                    (1..inner).fold(row[0].clone() * b[0][j].clone(), |acc, k| acc + row[k].clone() * b[k][j].clone())
                })
                .collect()
        })
        .collect()
}

fn mat_vec<S: Scalar>(a: &[Vec<S>], v: &[S]) -> Vec<S> {
    a.iter()
        .map(|row| (1..v.len()).fold(row[0].clone() * v[0].clone(), |acc, k| acc + row[k].clone() * v[k].clone()))
        .collect()
}

/// Residuals of the identities every algebra satisfies: `A_x² = 0`,
/// `h(x, ẋ + A_x w) = h(x, ẋ)`, `im h_x′(v) ⊆ D_{h(x,v)}`, the rank bound
/// `rank A_x ≤ n/2`, and `h(x, v) = x` wherever the rank is 0.
pub fn check_identities(h: &AlgebraMap, cfg: &SampleConfig) -> Result<Report> {
    let backend = h.backend_for(cfg.backend)?;
    let n = h.dim;
    let radius = h.fiber_radius(cfg);
    let (nil_tol, id_tol) = match backend {
        Backend::Rational => (0.0, 0.0),
        Backend::Float => (NILPOTENCY_TOL, IDENTITY_TOL),
    };
    let (nilpotency, invariance) = with_backend!(backend, S => {
        let nilpotency = sampled_check::<S, _, _>(
            "nilpotency",
            backend,
            nil_tol,
            cfg.samples,
            cfg.seed,
            |r| sampling::uniform_box(r, &h.domain),
            |x| {
                let a = h.endomorphism(x)?;
                Ok(mat_mul(&a, &a).concat())
            },
        )?;
        let invariance = sampled_check::<S, _, _>(
            "d_invariance",
            backend,
            id_tol,
            cfg.samples,
            cfg.seed.wrapping_add(1),
            |r| h.sample_point(r, radius, 2),
            |p| {
                let (x, xd, w) = (&p[..n], &p[n..2 * n], &p[2 * n..]);
                let aw = mat_vec(&h.endomorphism(x)?, w);
                let shifted: Vec<S> = xd.iter().zip(&aw).map(|(a, b)| a.clone() + b.clone()).collect();
                Ok(h.wrap(sub(&h.apply(x, &shifted)?, &h.apply(x, xd)?)))
            },
        )?;
        (nilpotency, invariance)
    });

    let inclusion = run_sampled(
        cfg.samples,
        cfg.seed.wrapping_add(2),
        |r| {
            let mut p = h.sample_point(r, radius, 1);
            snap_all(&mut p);
            p
        },
        |p| {
            let (y, jac) = h.fiber_jacobian(&p[..n], &p[n..])?;
            let basis = image_basis(&to_dmatrix(&h.endomorphism(&y)?));
            let j = to_dmatrix(&jac);
            Ok((0..n).map(|c| distance_to_span(&DVector::from_column_slice(j.column(c).as_slice()), &basis)).fold(0.0, f64::max))
        },
    )?;
    let mut inc = Check::new("image_inclusion", Backend::Float, IDENTITY_TOL).rejected(inclusion.rejected);
    for (p, r) in &inclusion.accepted {
        inc.record_norm(p, *r);
    }

    let mut profile: BTreeMap<usize, usize> = BTreeMap::new();
    let mut bound = Check::new("rank_bound", backend, 0.0);
    let mut projection = Check::new("rank0_projection", Backend::Float, IDENTITY_TOL.min(h.default_tolerance().max(TOL_POLY)));
    let ranks = run_sampled(
        cfg.samples,
        cfg.seed.wrapping_add(3),
        |r| {
            let mut p = h.sample_point(r, radius, 1);
            snap_all(&mut p);
            p
        },
        |p| {
            let rank = rank_of(h, &p[..n])?;
            let moved = if rank == 0 {
                Some(h.wrap(sub(&h.apply(&p[..n], &p[n..])?, &p[..n])))
            } else {
                None
            };
            Ok((rank, moved))
        },
    )?;
    bound = bound.rejected(ranks.rejected);
    for (p, (rank, moved)) in &ranks.accepted {
        *profile.entry(*rank).or_default() += 1;
        bound.record_norm(&p[..n], rank.saturating_sub(n / 2) as f64);
        if let Some(d) = moved {
            projection.record(p, d);
        }
    }

    let checks = vec![nilpotency, invariance, inc.finish(), bound.finish(), projection.finish()];
    Ok(Report::new(h.name.clone(), checks).with_details(json!({
        "rank_profile": profile,
        "rank_bound": n / 2,
    })))
}

/// `N_A(eᵢ, eⱼ)` at `x` as `table[i][j]`, using
/// `(D_{AX}A)Y − (D_{AY}A)X − A((D_X A)Y) + A((D_Y A)X)`.
pub fn nijenhuis_at<S: Scalar>(field: &MatrixField, x: &[S]) -> Result<Vec<Vec<Vec<S>>>, EvalError> {
    let n = field.dim();
    let (a, da) = field.with_derivatives(x)?;
    let zero = x[0].zero_like();
    // D_X A = Σ_k X_k ∂_k A
    let directional = |dir: &[S]| -> Vec<Vec<S>> {
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| (0..n).fold(zero.clone(), |acc, k| acc + dir[k].clone() * da[k][r][c].clone()))
                    .collect()
            })
            .collect()
    };
    let col = |m: &[Vec<S>], j: usize| -> Vec<S> { m.iter().map(|row| row[j].clone()).collect() };
    let ae: Vec<Vec<S>> = (0..n).map(|i| col(&a, i)).collect();
    let d_ae: Vec<Vec<Vec<S>>> = ae.iter().map(|v| directional(v)).collect();
    let mut table = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let t1 = col(&d_ae[i], j);
            let t2 = col(&d_ae[j], i);
            let t3 = mat_vec(&a, &col(&da[i], j));
            let t4 = mat_vec(&a, &col(&da[j], i));
            table[i][j] = (0..n)
                .map(|r| t1[r].clone() - t2[r].clone() - t3[r].clone() + t4[r].clone())
                .collect();
        }
    }
    Ok(table)
}

/// Frobenius norm of a Nijenhuis table.
pub fn nijenhuis_norm<S: Scalar>(table: &[Vec<Vec<S>>]) -> f64 {
    table
        .iter()
        .flatten()
        .flatten()
        .map(|c| c.real_part().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Maximum entry of `N_A` over samples of a semi-affine algebra's field.
pub fn check_nijenhuis(h: &AlgebraMap, cfg: &SampleConfig) -> Result<Check> {
    let field = h
        .field()
        .ok_or_else(|| Error::Precondition(format!("algebra `{}` is not semi-affine", h.name)))?;
    let backend = match cfg.backend {
        Some(Backend::Rational) if !field.is_rational() => return Err(Error::Backend("rational".into())),
        Some(b) => b,
        None if field.is_rational() => Backend::Rational,
        None => Backend::Float,
    };
    let tol = match backend {
        Backend::Rational => 0.0,
        Backend::Float => cfg.tolerance.unwrap_or(NIJENHUIS_TOL),
    };
    with_backend!(backend, S => sampled_check::<S, _, _>(
        "nijenhuis",
        backend,
        tol,
        cfg.samples,
        cfg.seed,
        |r| sampling::uniform_box(r, field.domain()),
        |x| Ok(nijenhuis_at(field, x)?.into_iter().flatten().flatten().collect()),
    ))
}

/// Checks that `f` is a morphism `h → k`: `k∘Tf = f∘h`, and that `f′`
/// intertwines the endomorphisms, `f′(x)A_x = B_{f(x)}f′(x)`.
pub fn check_morphism(f: &ChartMap, h: &AlgebraMap, k: &AlgebraMap, cfg: &SampleConfig) -> Result<Report> {
    if f.input_dim() != h.dim || f.output_dim() != k.dim {
        return Err(Error::Shape(format!(
            "map is {} -> {}, algebras have dimensions {} and {}",
            f.input_dim(),
            f.output_dim(),
            h.dim,
            k.dim
        )));
    }
    let rational = f.is_rational() && h.is_rational() && k.is_rational();
    let backend = match cfg.backend {
        Some(Backend::Rational) if !rational => return Err(Error::Backend("rational".into())),
        Some(b) => b,
        None if rational => Backend::Rational,
        None => Backend::Float,
    };
    let tol = match backend {
        Backend::Rational => 0.0,
        Backend::Float => cfg
            .tolerance
            .unwrap_or_else(|| h.default_tolerance().max(k.default_tolerance()).max(if f.is_rational() { TOL_POLY } else { TOL_TRANSCENDENTAL })),
    };
    let (n, m) = (h.dim, k.dim);
    let radius = h.fiber_radius(cfg);
    let checks = with_backend!(backend, S => {
        let square = sampled_check::<S, _, _>(
            "morphism_square",
            backend,
            tol,
            cfg.samples,
            cfg.seed,
            |r| h.sample_point(r, radius, 1),
            |p| {
                let tf = tangent_lift(|a| f.eval_unchecked(a), p)?;
                let lhs = k.apply(&tf[..m], &tf[m..])?;
                let rhs = f.eval_unchecked(&h.apply(&p[..n], &p[n..])?)?;
                Ok(k.wrap(sub(&lhs, &rhs)))
            },
        )?;
        let intertwining = sampled_check::<S, _, _>(
            "intertwining",
            backend,
            tol,
            cfg.samples,
            cfg.seed.wrapping_add(1),
            |r| sampling::uniform_box(r, &h.domain),
            |x| {
                let alg = first_order(n);
                let pts: Vec<_> = x.iter().enumerate().map(|(i, xi)| alg.point(xi.clone(), &[(i + 1, xi.one_like())])).collect();
                let out = f.eval_unchecked(&pts)?;
                let fx: Vec<S> = out.iter().map(|o| o.scalar_part().clone()).collect();
                let jac: Vec<Vec<S>> = out.iter().map(|o| (1..=n).map(|j| o.coeff(j).clone()).collect()).collect();
                let left = mat_mul(&jac, &h.endomorphism(x)?);
                let right = mat_mul(&k.endomorphism(&fx)?, &jac);
                Ok(sub(&left.concat(), &right.concat()))
            },
        )?;
        vec![square, intertwining]
    });
    Ok(Report::new(format!("{} -> {}", h.name, k.name), checks))
}

/// Named closed-form algebras.
pub mod examples {
    use super::*;
    use std::f64::consts::TAU;

    /// `ℝ × S¹` with `h(x,θ,ẋ,θ̇) = (x, θ + ẋ)`; leaves are the circles `{a} × S¹`.
    pub fn cylinder() -> Result<AlgebraMap> {
        let a = MatrixQ::from_ints(&[&[0, 0], &[1, 0]]);
        let field = MatrixField::constant(&a, DomainBox::new(vec![-2.0, 0.0], vec![2.0, TAU])?)?;
        make_semi_affine(field)?.with_name("cylinder").with_periodic(vec![None, Some(TAU)])
    }

    /// The torus `h(x,θ,ẋ,θ̇) = (x, θ + sin(x)ẋ)`, both coordinates mod 2π.
    pub fn torus() -> Result<AlgebraMap> {
        let field = MatrixField::parse(&[&["0", "0"], &["sin(x1)", "0"]], DomainBox::cube(2, 0.0, TAU))?;
        make_semi_affine(field)?.with_name("torus").with_periodic(vec![Some(TAU), Some(TAU)])
    }

    /// `h((x,y),(v₁,v₂)) = (x, y + x·v₁)`.
    pub fn semi_affine_passing() -> Result<AlgebraMap> {
        let field = MatrixField::parse(&[&["0", "0"], &["x1", "0"]], DomainBox::cube(2, -2.0, 2.0))?;
        Ok(make_semi_affine(field)?.with_name("semi-affine x*v1"))
    }

    /// `h((x,y),(v₁,v₂)) = (x, y + y·v₁)`, which is not an algebra.
    pub fn semi_affine_failing() -> Result<AlgebraMap> {
        let field = MatrixField::parse(&[&["0", "0"], &["x2", "0"]], DomainBox::cube(2, -2.0, 2.0))?;
        Ok(make_semi_affine(field)?.with_name("semi-affine y*v1"))
    }

    /// `A(x) = x₂E₁₃ + x₁E₂₃` on `ℝ⁴`.
    pub fn nijenhuis_designated() -> Result<MatrixField> {
        MatrixField::parse(
            &[&["0", "0", "x2", "0"], &["0", "0", "x1", "0"], &["0", "0", "0", "0"], &["0", "0", "0", "0"]],
            DomainBox::cube(4, -2.0, 2.0),
        )
    }

    /// `A(x) = E₁₃ + x₁E₂₄`, square zero with `N(e₃, e₄) = e₂`.
    pub fn nijenhuis_counterexample() -> Result<MatrixField> {
        MatrixField::parse(
            &[&["0", "0", "1", "0"], &["0", "0", "0", "x1"], &["0", "0", "0", "0"], &["0", "0", "0", "0"]],
            DomainBox::cube(4, -2.0, 2.0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;
    use crate::scalar::int;

    fn cfg(samples: usize) -> SampleConfig {
        SampleConfig::new(samples, 42)
    }

    #[test]
    fn affine_nilpotent_passes_exactly() {
        let h = make_affine(&MatrixQ::from_ints(&[&[0, 1], &[0, 0]])).unwrap();
        assert_eq!(h.apply(&[int(1), int(2)], &[int(3), int(4)]).unwrap(), vec![int(5), int(2)]);
        let r = check_axioms(&h, &cfg(50)).unwrap();
        assert!(r.passed, "{r:#?}");
        assert_eq!(r.checks[0].backend, Backend::Rational);
    }

    #[test]
    fn affine_identity_fails_action() {
        let h = make_affine(&MatrixQ::identity(2)).unwrap();
        let r = check_axioms(&h, &cfg(100)).unwrap();
        assert!(r.check("unit").unwrap().passed);
        let action = r.check("action").unwrap();
        assert!(!action.passed);
        assert!(action.max_residual >= 1.0, "{}", action.max_residual);
    }

    #[test]
    fn endomorphisms_of_basic_algebras() {
        let t = make_trivial(2).unwrap();
        assert!(endomorphism_at(&t, &[0.5, 0.5]).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(rank_at(&t, &[0.5, 0.5]).unwrap(), 0);

        let f = make_free(&DomainBox::cube(1, -1.0, 1.0)).unwrap();
        let a = endomorphism_exact(&f, &[int(0), int(1)]).unwrap();
        assert_eq!(a, MatrixQ::from_ints(&[&[0, 0], &[1, 0]]));
        assert_eq!(rank_at(&f, &[0.25, 0.5]).unwrap(), 1);

        let m = MatrixQ::from_ints(&[&[0, 2], &[0, 0]]);
        let h = make_affine(&m).unwrap();
        assert_eq!(endomorphism_exact(&h, &[int(3), int(-7)]).unwrap(), m);
    }

    #[test]
    fn product_is_block_diagonal() {
        let p = make_product(&make_trivial(1).unwrap(), &make_free(&DomainBox::cube(1, -1.0, 1.0)).unwrap()).unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(rank_at(&p, &[0.5, 0.25, 0.0]).unwrap(), 1);
        let a = endomorphism_exact(&p, &[int(1), int(0), int(1)]).unwrap();
        assert_eq!(a, MatrixQ::from_ints(&[&[0, 0, 0], &[0, 0, 0], &[0, 1, 0]]));
        assert!(check_axioms(&p, &cfg(40)).unwrap().passed);
    }

    #[test]
    fn periodic_examples_pass() {
        for h in [cylinder().unwrap(), torus().unwrap()] {
            let r = check_axioms(&h, &cfg(60)).unwrap();
            assert!(r.passed, "{r:#?}");
            let id = check_identities(&h, &cfg(40)).unwrap();
            assert!(id.passed, "{id:#?}");
        }
    }

    #[test]
    fn semi_affine_pair() {
        assert!(check_axioms(&semi_affine_passing().unwrap(), &cfg(60)).unwrap().passed);
        assert!(!check_axioms(&semi_affine_failing().unwrap(), &cfg(60)).unwrap().passed);
    }

    #[test]
    fn nijenhuis_values() {
        let z = [int(1), int(1), int(0), int(0)];
        let t = nijenhuis_at(&nijenhuis_designated().unwrap(), &z).unwrap();
        assert!(t.iter().flatten().flatten().all(Zero::is_zero));
        let t = nijenhuis_at(&nijenhuis_counterexample().unwrap(), &z).unwrap();
        assert_eq!(t[2][3], vec![int(0), int(1), int(0), int(0)]);
        assert_eq!(t[3][2], vec![int(0), int(-1), int(0), int(0)]);
        assert!((nijenhuis_norm(&t) - 2f64.sqrt()).abs() < 1e-15);
        let h = semi_affine_passing().unwrap();
        let c = check_nijenhuis(&h, &cfg(30)).unwrap();
        assert!(c.passed && c.max_residual == 0.0);
    }

    #[test]
    fn morphisms() {
        let t1 = make_trivial(1).unwrap();
        let t2 = make_trivial(2).unwrap();
        let f = ChartMap::parse(&["x"], &["x^2", "sin(x)"], DomainBox::cube(1, -2.0, 2.0)).unwrap();
        assert!(check_morphism(&f, &t1, &t2, &cfg(30)).unwrap().passed);

        let free = make_free(&DomainBox::cube(1, -2.0, 2.0)).unwrap();
        let aff = make_affine(&MatrixQ::from_ints(&[&[0, 1], &[0, 0]])).unwrap();
        let swap = ChartMap::parse(&["s", "w"], &["w", "s"], DomainBox::cube(2, -2.0, 2.0)).unwrap();
        let r = check_morphism(&swap, &free, &aff, &cfg(40)).unwrap();
        assert!(r.passed, "{r:#?}");
        let id = ChartMap::parse(&["s", "w"], &["s", "w"], DomainBox::cube(2, -2.0, 2.0)).unwrap();
        let r = check_morphism(&id, &free, &aff, &cfg(40)).unwrap();
        assert!(!r.check("morphism_square").unwrap().passed);
        assert!(!r.check("intertwining").unwrap().passed);
    }

    #[test]
    fn spec_round_trip() {
        let h = make_product(&cylinder().unwrap(), &make_trivial(1).unwrap()).unwrap();
        let spec = h.to_spec().unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back = AlgebraMap::from_spec(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.to_spec().unwrap(), spec);
        assert!(check_axioms(&back, &cfg(30)).unwrap().passed);
    }
}
