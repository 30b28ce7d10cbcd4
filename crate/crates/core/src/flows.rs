//! Rank-1 algebras `h(x, v) = φ_{α(x,v)}(x)` from the flow `φ` of a vector
//! field and a time function `α`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebras::{algebra_input_names, check_morphism, AlgebraMap, SampleConfig, TOL_POLY, TOL_TRANSCENDENTAL};
use crate::error::{Error, EvalError, Result};
use crate::jets::{first_order, ChartMap, DomainBox, Expr};
use crate::monad::tangent_lift;
use crate::report::{Check, Report};
use crate::sampling::{self, run_sampled, sampled_check, snap_all};
use crate::scalar::{int, rat, Backend, Scalar};

pub const TIME_AXIOM_TOL: f64 = 1e-6;
pub const STEPS_PER_DIAMETER: f64 = 1024.0;
pub const DEFAULT_MAX_STEPS: usize = 1000;
const MIN_FLOW_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub step: f64,
    pub max_steps: usize,
}

/// An autonomous vector field with a fixed-step RK4 integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: ChartMap,
    integrator: Integrator,
}

impl VectorField {
    pub fn new(chart: ChartMap) -> Result<Self> {
        if chart.input_dim() != chart.output_dim() {
            return Err(Error::Shape(format!(
                "a vector field needs n -> n, got {} -> {}",
                chart.input_dim(),
                chart.output_dim()
            )));
        }
        let integrator = Integrator {
            step: chart.domain().diameter() / STEPS_PER_DIAMETER,
            max_steps: DEFAULT_MAX_STEPS,
        };
        Ok(VectorField { chart, integrator })
    }

    /// Components in `x1..xn`.
    pub fn parse(exprs: &[&str], domain: DomainBox) -> Result<Self> {
        let names = ChartMap::indexed_names("x", domain.dim());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::new(ChartMap::parse(&refs, exprs, domain)?)
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Result<Self> {
        if !(integrator.step.is_finite() && integrator.step > 0.0) || integrator.max_steps == 0 {
            return Err(Error::Spec("integrator step must be positive and max_steps nonzero".into()));
        }
        self.integrator = integrator;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.chart.input_dim()
    }

    pub fn chart(&self) -> &ChartMap {
        &self.chart
    }

    pub fn domain(&self) -> &DomainBox {
        self.chart.domain()
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn is_rational(&self) -> bool {
        self.chart.is_rational()
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>, EvalError> {
        let real: Vec<f64> = x.iter().map(Scalar::real_part).collect();
        if !self.domain().contains(&real) {
            return Err(EvalError::FlowDomainExit(real));
        }
        self.chart.eval_unchecked(x)
    }

    fn rk4_step<S: Scalar>(&self, y: &[S], dt: &S) -> Result<Vec<S>, EvalError> {
        let half = dt.scale(&rat(1, 2));
        let axpy = |k: &[S], h: &S| -> Vec<S> { y.iter().zip(k).map(|(a, b)| a.clone() + h.clone() * b.clone()).collect() };
        let k1 = self.eval(y)?;
        let k2 = self.eval(&axpy(&k1, &half))?;
        let k3 = self.eval(&axpy(&k2, &half))?;
        let k4 = self.eval(&axpy(&k3, dt))?;
        let sixth = dt.scale(&rat(1, 6));
        Ok((0..y.len())
            .map(|i| {
                let sum = k1[i].clone() + k2[i].scale(&int(2)) + k3[i].scale(&int(2)) + k4[i].clone();
                y[i].clone() + sixth.clone() * sum
            })
            .collect())
    }

    fn flow_with_step<S: Scalar>(&self, x: &[S], t: &S, step: f64, budget: usize) -> Result<Vec<S>, EvalError> {
        let tr = t.real_part();
        if !tr.is_finite() {
            return Err(EvalError::Domain { op: "flow time", value: tr });
        }
        let needed = ((tr.abs() / step).ceil() as usize).max(1);
        if needed > budget {
            return Err(EvalError::StepBudgetExceeded { needed, budget });
        }
        let dt = t.scale(&int(1)) * t.constant(&rat(1, needed as i64));
        let mut y = x.to_vec();
        for _ in 0..needed {
            y = self.rk4_step(&y, &dt)?;
        }
        Ok(y)
    }

    /// `φ_t(x)` with at least one step; jets in `x` or `t` are transported
    /// through the integrator arithmetic.
    pub fn flow<S: Scalar>(&self, x: &[S], t: &S) -> Result<Vec<S>, EvalError> {
        self.flow_with_step(x, t, self.integrator.step, self.integrator.max_steps)
    }

    /// `φ_t(x)` together with the Richardson estimate of its error.
    pub fn flow_estimate(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, f64), EvalError> {
        let coarse = self.flow(x, &t)?;
        let fine = self.flow_with_step(x, &t, self.integrator.step / 2.0, 2 * self.integrator.max_steps)?;
        let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok((coarse, diff * 16.0 / 15.0))
    }
}

/// The time function of a rank-1 algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeFunction {
    /// `α(x, v)` in `x1..xn, v1..vn`.
    Scalar(ChartMap),
    /// Covector coefficients `α_x`, with `α(x, v) = α_x(v)`.
    OneForm(ChartMap),
}

impl TimeFunction {
    pub fn scalar(expr: &str, domain: &DomainBox) -> Result<Self> {
        let n = domain.dim();
        let names = algebra_input_names(n);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let fiber = domain.product(&DomainBox::cube(n, -1e9, 1e9));
        Ok(TimeFunction::Scalar(ChartMap::parse(&refs, &[expr], fiber)?))
    }

    pub fn one_form(exprs: &[&str], domain: &DomainBox) -> Result<Self> {
        let names = ChartMap::indexed_names("x", domain.dim());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(TimeFunction::OneForm(ChartMap::parse(&refs, exprs, domain.clone())?))
    }

    pub fn dim(&self) -> usize {
        match self {
            TimeFunction::Scalar(c) => c.input_dim() / 2,
            TimeFunction::OneForm(c) => c.input_dim(),
        }
    }

    pub fn is_rational(&self) -> bool {
        match self {
            TimeFunction::Scalar(c) | TimeFunction::OneForm(c) => c.is_rational(),
        }
    }

    pub fn eval<S: Scalar>(&self, x: &[S], v: &[S]) -> Result<S, EvalError> {
        match self {
            TimeFunction::Scalar(c) => Ok(c.eval_unchecked(&[x, v].concat())?.remove(0)),
            TimeFunction::OneForm(c) => {
                let a = c.eval_unchecked(x)?;
                Ok(dot(&a, v))
            }
        }
    }

    fn spec(&self) -> TimeSpec {
        match self {
            TimeFunction::Scalar(c) => TimeSpec {
                kind: TimeKind::Scalar,
                exprs: c.expr_strings(),
            },
            TimeFunction::OneForm(c) => TimeSpec {
                kind: TimeKind::Oneform,
                exprs: c.expr_strings(),
            },
        }
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    (1..a.len()).fold(a[0].clone() * b[0].clone(), |acc, i| acc + a[i].clone() * b[i].clone())
}

/// The data behind a rank-1 algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1 {
    field: VectorField,
    alpha: TimeFunction,
    tolerance: f64,
}

impl Rank1 {
    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn alpha(&self) -> &TimeFunction {
        &self.alpha
    }

    pub fn domain(&self) -> &DomainBox {
        self.field.domain()
    }

    /// Calibrated as ten times the largest Richardson estimate on a sample panel.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn apply<S: Scalar>(&self, x: &[S], v: &[S]) -> Result<Vec<S>, EvalError> {
        let t = self.alpha.eval(x, v)?;
        self.field.flow(x, &t)
    }

    pub fn spec(&self, name: &str) -> Rank1Spec {
        Rank1Spec {
            name: Some(name.to_string()),
            x: self.field.chart.expr_strings(),
            alpha: self.alpha.spec(),
            integrator: Some(self.field.integrator),
            domain: self.domain().clone(),
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    Scalar,
    Oneform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub kind: TimeKind,
    pub exprs: Vec<String>,
}

/// JSON form of a rank-1 algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rank1Spec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "X")]
    pub x: Vec<String>,
    pub alpha: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    pub domain: DomainBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Rank1Spec {
    pub fn build(&self) -> Result<AlgebraMap> {
        self.domain.validate()?;
        let xs: Vec<&str> = self.x.iter().map(String::as_str).collect();
        let mut field = VectorField::parse(&xs, self.domain.clone())?;
        if let Some(i) = self.integrator {
            field = field.with_integrator(i)?;
        }
        let exprs: Vec<&str> = self.alpha.exprs.iter().map(String::as_str).collect();
        let alpha = match self.alpha.kind {
            TimeKind::Scalar if exprs.len() == 1 => TimeFunction::scalar(exprs[0], &self.domain)?,
            TimeKind::Scalar => return Err(Error::Spec("a scalar time function has exactly one expression".into())),
            TimeKind::Oneform => TimeFunction::one_form(&exprs, &self.domain)?,
        };
        let h = make_rank1(field, alpha)?.with_name(self.name.clone().unwrap_or_else(|| "rank-1".into()));
        Ok(match self.tolerance {
            Some(t) => h.with_tolerance(t),
            None => h,
        })
    }
}

const CALIBRATION_SAMPLES: usize = 32;
const CALIBRATION_SEED: u64 = 7;

/// `h(x, v) = φ_{α(x,v)}(x)`. Fails if `α(x, 0) ≠ 0` on calibration samples.
pub fn make_rank1(field: VectorField, alpha: TimeFunction) -> Result<AlgebraMap> {
    let n = field.dim();
    if alpha.dim() != n {
        return Err(Error::Shape(format!("time function on dimension {}, field on {n}", alpha.dim())));
    }
    let domain = field.domain().clone();
    let radius = 0.25 * domain.half_width();
    let panel = run_sampled(
        CALIBRATION_SAMPLES,
        CALIBRATION_SEED,
        |r| {
            let mut p = sampling::uniform_box(r, &domain);
            p.extend(sampling::uniform_ball(r, n, radius));
            p
        },
        |p| {
            let zero = alpha.eval(&p[..n], &vec![0.0; n])?;
            let t = alpha.eval(&p[..n], &p[n..])?;
            Ok((zero, field.flow_estimate(&p[..n], t)?.1))
        },
    )?;
    let mut worst = 0.0f64;
    for (p, (zero, est)) in &panel.accepted {
        if zero.abs() > TOL_TRANSCENDENTAL {
            return Err(Error::Precondition(format!("time function is {zero} at v = 0, x = {:?}", &p[..n])));
        }
        worst = worst.max(*est);
    }
    let tolerance = (10.0 * worst).max(MIN_FLOW_TOL);
    Ok(AlgebraMap::from_rank1("rank-1", Rank1 { field, alpha, tolerance }))
}

fn time_tolerance(cfg: &SampleConfig) -> f64 {
    cfg.tolerance.unwrap_or(TIME_AXIOM_TOL)
}

/// Residuals of the semibasic axiom `α(x, v + λX_x) = α(x, v)` and the
/// cocycle identity `α(φ_t(x), φ_t′(x)ẋ) = α(x, v + ẋ) − α(x, v)` with
/// `t = α(x, v)`.
pub fn check_time_axioms(field: &VectorField, alpha: &TimeFunction, cfg: &SampleConfig) -> Result<Report> {
    let n = field.dim();
    let domain = field.domain().clone();
    let radius = cfg.radius_fraction * domain.half_width();
    let tol = time_tolerance(cfg);
    let semibasic = sampled_check::<f64, _, _>(
        "semibasic",
        Backend::Float,
        tol,
        cfg.samples,
        cfg.seed,
        |r| {
            let mut p = sampling::uniform_box(r, &domain);
            p.extend(sampling::uniform_ball(r, n, radius));
            p.push(sampling::uniform(r, -1.0, 1.0));
            p
        },
        |p| {
            let (x, v, lambda) = (&p[..n], &p[n..2 * n], p[2 * n]);
            let xv = field.eval(x)?;
            let shifted: Vec<f64> = v.iter().zip(&xv).map(|(a, b)| a + lambda * b).collect();
            Ok(vec![alpha.eval(x, &shifted)? - alpha.eval(x, v)?])
        },
    )?;
    let cocycle = sampled_check::<f64, _, _>(
        "cocycle",
        Backend::Float,
        tol,
        cfg.samples,
        cfg.seed.wrapping_add(1),
        |r| {
            let mut p = sampling::uniform_box(r, &domain);
            p.extend(sampling::uniform_ball(r, n, radius));
            p.extend(sampling::uniform_ball(r, n, radius));
            p
        },
        |p| {
            let (x, v, xd) = (&p[..n], &p[n..2 * n], &p[2 * n..]);
            let t = alpha.eval(x, v)?;
            let moved = tangent_lift(
                |a| {
                    let tc = a[0].constant_f64(t);
                    field.flow(a, &tc)
                },
                &[x, xd].concat(),
            )?;
            let lhs = alpha.eval(&moved[..n], &moved[n..])?;
            let vx: Vec<f64> = v.iter().zip(xd).map(|(a, b)| a + b).collect();
            Ok(vec![lhs - (alpha.eval(x, &vx)? - t)])
        },
    )?;
    Ok(Report::new("time axioms", vec![semibasic, cocycle]))
}

/// `(i_X α, L_X α)` at `x`, with `L_X α = i_X dα + d(i_X α)` assembled from
/// first-order jets of `X` and `α`.
pub fn basic_form_residuals<S: Scalar>(field: &ChartMap, alpha: &ChartMap, x: &[S]) -> Result<(S, Vec<S>), EvalError> {
    let n = x.len();
    let alg = first_order(n);
    let pts: Vec<_> = x.iter().enumerate().map(|(i, xi)| alg.point(xi.clone(), &[(i + 1, xi.one_like())])).collect();
    let xs = field.eval_unchecked(&pts)?;
    let al = alpha.eval_unchecked(&pts)?;
    let xv: Vec<S> = xs.iter().map(|e| e.scalar_part().clone()).collect();
    let av: Vec<S> = al.iter().map(|e| e.scalar_part().clone()).collect();
    let contraction = dot(&av, &xv);
    // (L_X α)_j = Σ_i X_i ∂_i α_j + Σ_i α_i ∂_j X_i
    let lie = (0..n)
        .map(|j| {
            (0..n).fold(x[0].zero_like(), |acc, i| {
                acc + xv[i].clone() * al[j].coeff(i + 1).clone() + av[i].clone() * xs[i].coeff(j + 1).clone()
            })
        })
        .collect();
    Ok((contraction, lie))
}

/// Checks `i_X α = 0`, `L_X α = 0` and invariance of `α` under the flow.
pub fn check_basic_form(field: &VectorField, alpha: &TimeFunction, cfg: &SampleConfig) -> Result<Report> {
    let TimeFunction::OneForm(form) = alpha else {
        return Err(Error::Precondition("basic-form checks need a one-form time function".into()));
    };
    let n = field.dim();
    let domain = field.domain().clone();
    let rational = field.is_rational() && form.is_rational();
    let backend = match cfg.backend {
        Some(Backend::Rational) if !rational => return Err(Error::Backend("rational".into())),
        Some(b) => b,
        None if rational => Backend::Rational,
        None => Backend::Float,
    };
    let tol = match backend {
        Backend::Rational => 0.0,
        Backend::Float => cfg.tolerance.unwrap_or(if rational { TOL_POLY } else { TOL_TRANSCENDENTAL }),
    };
    let (contraction, lie) = with_backend!(backend, S => {
        let contraction = sampled_check::<S, _, _>(
            "contraction",
            backend,
            tol,
            cfg.samples,
            cfg.seed,
            |r| sampling::uniform_box(r, &domain),
            |x| Ok(vec![basic_form_residuals(field.chart(), form, x)?.0]),
        )?;
        let lie = sampled_check::<S, _, _>(
            "lie_derivative",
            backend,
            tol,
            cfg.samples,
            cfg.seed,
            |r| sampling::uniform_box(r, &domain),
            |x| Ok(basic_form_residuals(field.chart(), form, x)?.1),
        )?;
        (contraction, lie)
    });
    let radius = cfg.radius_fraction * domain.half_width();
    let pullback = sampled_check::<f64, _, _>(
        "flow_pullback",
        Backend::Float,
        time_tolerance(cfg),
        cfg.samples,
        cfg.seed.wrapping_add(2),
        |r| {
            let mut p = sampling::uniform_box(r, &domain);
            p.extend(sampling::uniform_ball(r, n, 1.0));
            p.push(sampling::uniform(r, -radius, radius));
            p
        },
        |p| {
            let (x, w, t) = (&p[..n], &p[n..2 * n], p[2 * n]);
            let moved = tangent_lift(
                |a| {
                    let tc = a[0].constant_f64(t);
                    field.flow(a, &tc)
                },
                &[x, w].concat(),
            )?;
            let pulled = dot(&form.eval_unchecked(&moved[..n])?, &moved[n..]);
            Ok(vec![pulled - dot(&form.eval_unchecked(x)?, w)])
        },
    )?;
    Ok(Report::new("basic form", vec![contraction, lie, pullback]))
}

/// Monomials `x^a` of total degree at most `degree` in `n` variables.
fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|m: Vec<u32>| {
                let used: u32 = m.iter().sum();
                (0..=degree - used).map(move |e| [m.clone(), vec![e]].concat())
            })
            .collect();
    }
    out
}

/// Smallest singular value, scaled by `1/√rows`, of the linear map taking
/// the coefficients of a polynomial one-form of degree `≤ degree` to its
/// stacked `(i_X α, L_X α)` values on the samples. A value bounded away from
/// zero means no unit-norm candidate is close to basic.
pub fn basic_form_obstruction(field: &VectorField, degree: u32, cfg: &SampleConfig) -> Result<Check> {
    let n = field.dim();
    let names = ChartMap::indexed_names("x", n);
    let basis: Vec<ChartMap> = monomials(n, degree)
        .into_iter()
        .flat_map(|m| {
            let mono = m
                .iter()
                .enumerate()
                .fold(Expr::int(1), |acc, (i, e)| if *e == 0 { acc } else { acc * Expr::var(i).powi(*e as i32) });
            (0..n).map(move |k| (0..n).map(|j| if j == k { mono.clone() } else { Expr::zero() }).collect::<Vec<_>>())
        })
        .map(|exprs| ChartMap::new(names.clone(), exprs, field.domain().clone()))
        .collect::<Result<_>>()?;
    let mut rng = sampling::rng(cfg.seed);
    let points: Vec<Vec<f64>> = (0..cfg.samples)
        .map(|_| {
            let mut p = sampling::uniform_box(&mut rng, field.domain());
            snap_all(&mut p);
            p
        })
        .collect();
    let rows = points.len() * (n + 1);
    let mut m = DMatrix::zeros(rows, basis.len());
    for (c, form) in basis.iter().enumerate() {
        for (s, x) in points.iter().enumerate() {
            let (ix, lie) = basic_form_residuals(field.chart(), form, x)?;
            m[(s * (n + 1), c)] = ix;
            for j in 0..n {
                m[(s * (n + 1) + 1 + j, c)] = lie[j];
            }
        }
    }
    let sv = m.svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min) / (rows as f64).sqrt();
    let holds = smin >= OBSTRUCTION_FLOOR;
    Ok(Check::fact(
        "no_basic_form",
        Backend::Float,
        holds,
        format!(
            "smallest scaled singular value {smin:e} over {} candidate directions (floor {OBSTRUCTION_FLOOR:e})",
            basis.len()
        ),
    ))
}

pub const OBSTRUCTION_FLOOR: f64 = 1e-3;

/// `h(x, v) = x/√(1 − x∧v)` on `[-1, 1]²`, defined where `x∧v < 1/2`.
pub fn radial_example() -> Result<AlgebraMap> {
    AlgebraMap::parse(
        "radial",
        &["x1/sqrt(1 - (x1*v2 - x2*v1))", "x2/sqrt(1 - (x1*v2 - x2*v1))"],
        DomainBox::cube(2, -1.0, 1.0),
    )?
    .with_guard("x1*v2 - x2*v1", 0.5)
}

/// The Euler field whose flow lines are the radial leaves.
pub fn radial_field() -> Result<VectorField> {
    VectorField::parse(&["x1", "x2"], DomainBox::cube(2, -1.0, 1.0))
}

pub fn rotation_field(half: f64) -> Result<VectorField> {
    VectorField::parse(&["-x2", "x1"], DomainBox::cube(2, -half, half))
}

/// `X = (−y, x)` with `α_x(v) = −x₁v₁ − x₂v₂`; leaves are circles. The step
/// budget covers a full turn.
pub fn rotation_example() -> Result<AlgebraMap> {
    let field = rotation_field(1.5)?;
    let field = field.clone().with_integrator(Integrator {
        step: field.integrator().step,
        max_steps: 4096,
    })?;
    let alpha = TimeFunction::one_form(&["-x1", "-x2"], field.domain())?;
    Ok(make_rank1(field, alpha)?.with_name("rotation"))
}

/// Rotation with `β_y(w) = −y·w/4` on `[-3, 3]²`; `f(x) = 2x` maps the
/// rotation example into it.
pub fn scaled_rotation_example() -> Result<AlgebraMap> {
    let field = rotation_field(3.0)?;
    let field = field.clone().with_integrator(Integrator {
        step: field.integrator().step,
        max_steps: 4096,
    })?;
    let alpha = TimeFunction::one_form(&["-x1/4", "-x2/4"], field.domain())?;
    Ok(make_rank1(field, alpha)?.with_name("scaled rotation"))
}

fn one_form_of(h: &AlgebraMap) -> Result<(&VectorField, &ChartMap)> {
    let r = h
        .rank1()
        .ok_or_else(|| Error::Precondition(format!("`{}` is not a rank-1 flow algebra", h.name())))?;
    match r.alpha() {
        TimeFunction::OneForm(c) => Ok((r.field(), c)),
        TimeFunction::Scalar(_) => Err(Error::Precondition(format!("`{}` has a non-linear time function", h.name()))),
    }
}

/// Morphism square between rank-1 algebras and, for one-form time
/// functions, the residual of `f*β − gα` with the rescaling
/// `g(x) = β_{f(x)}(f′(x)α♯) / α_x(α♯)`.
pub fn check_rank1_morphism(f: &ChartMap, h: &AlgebraMap, k: &AlgebraMap, cfg: &SampleConfig) -> Result<Report> {
    for a in [h, k] {
        if a.rank1().is_none() {
            return Err(Error::Precondition(format!("`{}` is not a rank-1 flow algebra", a.name())));
        }
    }
    let mut report = check_morphism(f, h, k, cfg)?;
    report.checks.retain(|c| c.name == "morphism_square");
    if let (Ok((field, alpha)), Ok((_, beta))) = (one_form_of(h), one_form_of(k)) {
        let n = field.dim();
        let domain = field.domain().clone();
        let tol = cfg.tolerance.unwrap_or(TOL_TRANSCENDENTAL);
        let pull = sampled_check::<f64, _, _>(
            "pullback_rescaling",
            Backend::Float,
            tol,
            cfg.samples,
            cfg.seed.wrapping_add(5),
            |r| {
                let mut p = sampling::uniform_box(r, &domain);
                p.extend(sampling::uniform_ball(r, n, 1.0));
                p
            },
            |p| {
                let (x, v) = (&p[..n], &p[n..]);
                let a = alpha.eval_unchecked(x)?;
                let norm2 = dot(&a, &a);
                if norm2.sqrt() < 1e-9 {
                    return Err(EvalError::Domain {
                        op: "regular rank 1",
                        value: norm2,
                    });
                }
                let (fx, jac) = f.jacobian(x)?;
                let b = beta.eval_unchecked(&fx)?;
                let pulled: Vec<f64> = (0..n).map(|j| (0..b.len()).map(|i| b[i] * jac[(i, j)]).sum()).collect();
                let g = dot(&pulled, &a) / norm2;
                Ok(vec![dot(&pulled, v) - g * dot(&a, v)])
            },
        )?;
        report.checks.push(pull);
        report.passed = report.checks.iter().all(|c| c.passed);
    }
    Ok(report.with_details(json!({ "map": f.expr_strings() })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebras::{check_axioms, check_identities, rank_at};

    #[test]
    fn rotation_quarter_turn() {
        let f = rotation_field(1.5).unwrap();
        let y = f.flow(&[1.0, 0.0], &std::f64::consts::FRAC_PI_2).unwrap();
        assert!((y[0]).abs() < 1e-8 && (y[1] - 1.0).abs() < 1e-8, "{y:?}");
        assert_eq!(f.flow(&[0.3, 0.2], &0.0).unwrap(), vec![0.3, 0.2]);
        let (_, est) = f.flow_estimate(&[1.0, 0.0], 1.0).unwrap();
        assert!(est < 1e-10);
    }

    #[test]
    fn flow_composes() {
        let f = rotation_field(1.5).unwrap();
        let a = f.flow(&f.flow(&[0.5, 0.5], &0.3).unwrap(), &0.4).unwrap();
        let b = f.flow(&[0.5, 0.5], &0.7).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-11));
    }

    #[test]
    fn rotation_algebra() {
        let h = rotation_example().unwrap();
        let y = h.apply(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((y[0] - 1f64.cos()).abs() < 1e-9 && (y[1] + 1f64.sin()).abs() < 1e-9);
        let r = check_axioms(&h, &SampleConfig::new(40, 42)).unwrap();
        assert!(r.passed, "{r:#?}");
        let id = check_identities(&h, &SampleConfig::new(30, 42)).unwrap();
        assert!(id.passed, "{id:#?}");
        assert_eq!(rank_at(&h, &[1.0, 0.0]).unwrap(), 1);
        // A_x = α′ ⊗ X
        let a = crate::algebras::endomorphism_at(&h, &[1.0, 0.5]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, -1.0, -0.5]);
        assert!((a - expected).abs().max() < 1e-12);
    }

    #[test]
    fn time_axioms_and_basic_forms() {
        let f = rotation_field(1.5).unwrap();
        let alpha = TimeFunction::one_form(&["-x1", "-x2"], f.domain()).unwrap();
        let cfg = SampleConfig::new(40, 42);
        assert!(check_time_axioms(&f, &alpha, &cfg).unwrap().passed);
        let b = check_basic_form(&f, &alpha, &cfg).unwrap();
        assert!(b.passed, "{b:#?}");
        assert_eq!(b.checks[0].backend, Backend::Rational);

        let bad = TimeFunction::scalar("-x2*v1 + x1*v2", f.domain()).unwrap();
        let r = check_time_axioms(&f, &bad, &cfg).unwrap();
        assert!(r.check("semibasic").unwrap().max_residual >= 0.1);

        let push = VectorField::parse(&["1", "0"], DomainBox::cube(2, -1.0, 1.0)).unwrap();
        let dx = TimeFunction::one_form(&["1", "0"], push.domain()).unwrap();
        let r = check_basic_form(&push, &dx, &cfg).unwrap();
        assert!(!r.check("contraction").unwrap().passed);
    }

    #[test]
    fn free_algebra_as_flow() {
        let f = VectorField::parse(&["0", "1"], DomainBox::cube(2, -1.0, 1.0)).unwrap();
        let alpha = TimeFunction::scalar("v1", f.domain()).unwrap();
        assert!(check_time_axioms(&f, &alpha, &SampleConfig::new(30, 1)).unwrap().passed);
    }

    #[test]
    fn radial() {
        let h = radial_example().unwrap();
        let y = h.apply(&[1.0, 0.0], &[0.0, 0.25]).unwrap();
        assert!((y[0] - 1.0 / 0.75f64.sqrt()).abs() < 1e-15 && y[1] == 0.0);
        assert_eq!(h.apply(&[0.5, 0.5], &[0.2, 0.2]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(h.apply(&[1.0, 0.0], &[0.0, 0.5]), Err(EvalError::Guard { .. })));
        assert_eq!(rank_at(&h, &[1.0, 0.0]).unwrap(), 1);
        assert_eq!(rank_at(&h, &[0.0, 0.0]).unwrap(), 0);
        assert!(check_axioms(&h, &SampleConfig::new(60, 42)).unwrap().passed);
        let obstruction = basic_form_obstruction(&radial_field().unwrap(), 2, &SampleConfig::new(40, 42)).unwrap();
        assert!(obstruction.passed, "{obstruction:#?}");
        // the rotation field does carry a basic form
        let rot = basic_form_obstruction(&rotation_field(1.5).unwrap(), 2, &SampleConfig::new(40, 42)).unwrap();
        assert!(!rot.passed);
    }

    #[test]
    fn rank1_morphisms() {
        let h = rotation_example().unwrap();
        let k = scaled_rotation_example().unwrap();
        let cfg = SampleConfig::new(30, 42);
        let id = ChartMap::parse(&["x", "y"], &["x", "y"], DomainBox::cube(2, -1.5, 1.5)).unwrap();
        assert!(check_rank1_morphism(&id, &h, &h, &cfg).unwrap().passed);
        let scale = ChartMap::parse(&["x", "y"], &["2*x", "2*y"], DomainBox::cube(2, -1.5, 1.5)).unwrap();
        let r = check_rank1_morphism(&scale, &h, &k, &cfg).unwrap();
        assert!(r.passed, "{r:#?}");
        let collapse = ChartMap::parse(&["x", "y"], &["x^2 + y^2 + 1", "0"], DomainBox::cube(2, -1.5, 1.5)).unwrap();
        let r = check_rank1_morphism(&collapse, &h, &k, &cfg).unwrap();
        assert!(!r.check("morphism_square").unwrap().passed);
    }

    #[test]
    fn spec_round_trip() {
        let h = rotation_example().unwrap();
        let spec = h.rank1().unwrap().spec("rotation");
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"X\""));
        let back: Rank1Spec = serde_json::from_str(&text).unwrap();
        let h2 = back.build().unwrap();
        assert_eq!(h2.apply(&[0.5, 0.1], &[0.2, 0.3]).unwrap(), h.apply(&[0.5, 0.1], &[0.2, 0.3]).unwrap());
    }
}
