//! The tangent functor monad `(T, ζ, μ)` in charts.
//!
//! Points of `T^k M` are flat vectors of `2^k` blocks of length `n`: a point
//! of `T(T^{k-1} M)` is its base point followed by its tangent vector, so a
//! `T²M` point is `[x, v, ẋ, v̇]`.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::affine_hopf::delta_b;
use crate::error::{Error, EvalError, Result};
use crate::jets::{dual, second_order, ChartMap, DomainBox, Expr, WeilElement};
use crate::report::{Check, Report};
use crate::sampling::{self, run_sampled, snap_all, to_rationals};
use crate::scalar::{rational_to_f64, Backend, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentPoint<S> {
    pub x: Vec<S>,
    pub v: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T2Point<S> {
    pub x: Vec<S>,
    pub v: Vec<S>,
    pub xdot: Vec<S>,
    pub vdot: Vec<S>,
}

/// `(x, v, ẋ, v̇, x′, v′, ẋ′, v̇′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T3Point<S> {
    pub blocks: [Vec<S>; 8],
}

impl<S: Clone> TangentPoint<S> {
    pub fn new(x: Vec<S>, v: Vec<S>) -> Self {
        TangentPoint { x, v }
    }

    pub fn flat(&self) -> Vec<S> {
        [self.x.clone(), self.v.clone()].concat()
    }

    pub fn from_flat(p: &[S]) -> Self {
        let n = p.len() / 2;
        TangentPoint {
            x: p[..n].to_vec(),
            v: p[n..].to_vec(),
        }
    }
}

impl<S: Clone> T2Point<S> {
    pub fn new(x: Vec<S>, v: Vec<S>, xdot: Vec<S>, vdot: Vec<S>) -> Self {
        T2Point { x, v, xdot, vdot }
    }

    pub fn flat(&self) -> Vec<S> {
        [self.x.clone(), self.v.clone(), self.xdot.clone(), self.vdot.clone()].concat()
    }

    pub fn from_flat(p: &[S]) -> Self {
        let n = p.len() / 4;
        T2Point {
            x: p[..n].to_vec(),
            v: p[n..2 * n].to_vec(),
            xdot: p[2 * n..3 * n].to_vec(),
            vdot: p[3 * n..].to_vec(),
        }
    }
}

impl<S: Clone> T3Point<S> {
    pub fn flat(&self) -> Vec<S> {
        self.blocks.concat()
    }

    pub fn from_flat(p: &[S]) -> Self {
        let n = p.len() / 8;
        T3Point {
            blocks: std::array::from_fn(|i| p[i * n..(i + 1) * n].to_vec()),
        }
    }
}

fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub(crate) fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

/// `ζ(p) = (p, 0)` at any level.
pub fn zeta_flat<S: Scalar>(p: &[S]) -> Vec<S> {
    let zeros: Vec<S> = p.iter().map(Scalar::zero_like).collect();
    [p.to_vec(), zeros].concat()
}

/// `τ(p, q) = p` at any level.
pub fn tau_flat<S: Clone>(p: &[S]) -> Vec<S> {
    p[..p.len() / 2].to_vec()
}

/// `μ(x, v, ẋ, v̇) = (x, v + ẋ)` with blocks of length `p.len() / 4`; at
/// block length `2n` this is `μ_{TM}`.
pub fn mu_flat<S: Scalar>(p: &[S]) -> Vec<S> {
    let n = p.len() / 4;
    [p[..n].to_vec(), add(&p[n..2 * n], &p[2 * n..3 * n])].concat()
}

pub fn zero_section<S: Scalar>(x: &[S]) -> TangentPoint<S> {
    TangentPoint::from_flat(&zeta_flat(x))
}

pub fn mu<S: Scalar>(xi: &T2Point<S>) -> TangentPoint<S> {
    TangentPoint::from_flat(&mu_flat(&xi.flat()))
}

/// `Tf(p, q) = (f(p), f′(p)q)`, by evaluating `f` over dual numbers.
pub fn tangent_lift<S, F>(f: F, pq: &[S]) -> Result<Vec<S>, EvalError>
where
    S: Scalar,
    F: FnOnce(&[WeilElement<S>]) -> Result<Vec<WeilElement<S>>, EvalError>,
{
    let n = pq.len() / 2;
    let d = dual();
    let args: Vec<_> = (0..n).map(|i| d.point(pq[i].clone(), &[(1, pq[n + i].clone())])).collect();
    let out = f(&args)?;
    let mut flat: Vec<S> = out.iter().map(|o| o.coeff(0).clone()).collect();
    flat.extend(out.iter().map(|o| o.coeff(1).clone()));
    Ok(flat)
}

/// Second-order lift over the tensor square of the dual numbers:
/// `T²f(x,v,ẋ,v̇) = (f, f′v, f′ẋ, f′v̇ + f″(v,ẋ))`.
pub fn second_tangent_lift<S, F>(f: F, xi: &[S]) -> Result<Vec<S>, EvalError>
where
    S: Scalar,
    F: FnOnce(&[WeilElement<S>]) -> Result<Vec<WeilElement<S>>, EvalError>,
{
    let n = xi.len() / 4;
    let t = second_order();
    let args: Vec<_> = (0..n)
        .map(|i| t.element(vec![xi[i].clone(), xi[n + i].clone(), xi[2 * n + i].clone(), xi[3 * n + i].clone()]))
        .collect::<Result<_, _>>()?;
    let out = f(&args)?;
    Ok((0..4).flat_map(|k| out.iter().map(move |o| o.coeff(k).clone())).collect())
}

pub fn tangent_map<S: Scalar>(f: &ChartMap, p: &TangentPoint<S>) -> Result<TangentPoint<S>, EvalError> {
    Ok(TangentPoint::from_flat(&tangent_lift(|a| f.eval(a), &p.flat())?))
}

pub fn second_tangent_map<S: Scalar>(f: &ChartMap, xi: &T2Point<S>) -> Result<T2Point<S>, EvalError> {
    Ok(T2Point::from_flat(&second_tangent_lift(|a| f.eval(a), &xi.flat())?))
}

/// A family of maps `T²ℝⁿ → Tℝⁿ`, one chart map per dimension, with
/// inputs `x1.., v1.., xd1.., vd1..`.
#[derive(Clone)]
pub struct T2Map {
    name: String,
    build: Arc<dyn Fn(usize) -> Result<ChartMap> + Send + Sync>,
}

impl std::fmt::Debug for T2Map {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("T2Map").field("name", &self.name).finish()
    }
}

pub fn t2_input_names(n: usize) -> Vec<String> {
    ["x", "v", "xd", "vd"]
        .iter()
        .flat_map(|p| (1..=n).map(move |i| format!("{p}{i}")))
        .collect()
}

impl T2Map {
    pub fn new(name: impl Into<String>, build: impl Fn(usize) -> Result<ChartMap> + Send + Sync + 'static) -> Self {
        T2Map {
            name: name.into(),
            build: Arc::new(build),
        }
    }

    /// Coordinatewise template: `coord(i)` returns the base and fiber
    /// expressions of output coordinate `i` (1-based).
    pub fn coordinatewise(
        name: impl Into<String>,
        coord: impl Fn(usize) -> (String, String) + Send + Sync + 'static,
    ) -> Self {
        T2Map::new(name, move |n| {
            let names = t2_input_names(n);
            let (base, fiber): (Vec<String>, Vec<String>) = (1..=n).map(&coord).unzip();
            let exprs = base
                .iter()
                .chain(&fiber)
                .map(|s| Expr::parse(s, &names))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            ChartMap::new(names, exprs, DomainBox::cube(4 * n, -1e9, 1e9))
        })
    }

    pub fn mu() -> Self {
        T2Map::coordinatewise("mu", |i| (format!("x{i}"), format!("v{i} + xd{i}")))
    }

    /// `(x, v + ẋ + a v̇)`.
    pub fn mu_a(a: &Rational) -> Self {
        let a = crate::scalar::format_rational(a);
        T2Map::coordinatewise(format!("mu^{a}"), move |i| (format!("x{i}"), format!("v{i} + xd{i} + ({a})*vd{i}")))
    }

    /// `a τT + b Tτ`, i.e. `(x, a v + b ẋ)`.
    pub fn combination(a: &Rational, b: &Rational) -> Self {
        let (a, b) = (crate::scalar::format_rational(a), crate::scalar::format_rational(b));
        T2Map::coordinatewise(format!("{a}*tauT + {b}*Ttau"), move |i| {
            (format!("x{i}"), format!("({a})*v{i} + ({b})*xd{i}"))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn component(&self, n: usize) -> Result<ChartMap> {
        let c = (self.build)(n)?;
        if c.input_dim() != 4 * n || c.output_dim() != 2 * n {
            return Err(Error::Shape(format!(
                "{} component at n = {n} maps {} -> {}, expected {} -> {}",
                self.name,
                c.input_dim(),
                c.output_dim(),
                4 * n,
                2 * n
            )));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawConfig {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub backend: Backend,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl LawConfig {
    pub fn new(dim: usize, samples: usize, seed: u64, backend: Backend) -> Self {
        LawConfig {
            dim,
            samples,
            seed,
            backend,
            tolerance: None,
        }
    }
}

pub const TOL_FLOAT_POLY: f64 = 1e-12;
pub const TOL_FLOAT_TRANSCENDENTAL: f64 = 1e-9;

/// Default naturality panel on `[-1, 1]ⁿ`: a linear map, a quadratic map
/// and (float backend only) a transcendental one.
pub fn default_panel(n: usize, backend: Backend) -> Vec<ChartMap> {
    let names = ChartMap::indexed_names("x", n);
    let next = |i: usize| if i == n { 1 } else { i + 1 };
    let build = |f: &dyn Fn(usize) -> String| {
        let exprs: Vec<String> = (1..=n).map(f).collect();
        let refs: Vec<&str> = exprs.iter().map(String::as_str).collect();
        let nrefs: Vec<&str> = names.iter().map(String::as_str).collect();
        ChartMap::parse(&nrefs, &refs, DomainBox::cube(n, -1.0, 1.0)).expect("panel maps are well formed")
    };
    let mut panel = vec![
        build(&|i| format!("2*x{i} - x{}/3", next(i))),
        build(&|i| format!("x{i}^2 - x{i}*x{} + 1/2", next(i))),
    ];
    if backend == Backend::Float {
        panel.push(build(&|i| format!("sin(x{i}) + exp(x{})/4", next(i))));
    }
    panel
}

struct LawContext {
    n: usize,
    mu_n: ChartMap,
    mu_2n: ChartMap,
    maps: Vec<ChartMap>,
}

const CORE_LAWS: [&str; 3] = ["unit_mu_zetaT", "unit_mu_Tzeta", "associativity"];

impl LawContext {
    fn mu<S: Scalar>(&self, xi: &[S]) -> Result<Vec<S>, EvalError> {
        self.mu_n.eval_unchecked(xi)
    }

    /// Residual vectors, in the order of `CORE_LAWS` then three per map.
    fn residuals<S: Scalar>(&self, s: &[S]) -> Result<Vec<Vec<S>>, EvalError> {
        let n = self.n;
        let p = &s[..2 * n];
        let xi = &s[..4 * n];
        let mut out = Vec::with_capacity(3 + 3 * self.maps.len());

        out.push(sub(&self.mu(&zeta_flat(p))?, p));
        let tzeta = tangent_lift(|a| Ok(zeta_flat(a)), p)?;
        out.push(sub(&self.mu(&tzeta)?, p));
        let left = self.mu(&self.mu_2n.eval_unchecked(s)?)?;
        let right = self.mu(&tangent_lift(|a| self.mu_n.eval_unchecked(a), s)?)?;
        out.push(sub(&left, &right));

        let x = &s[..n];
        for f in &self.maps {
            let fx = f.eval(x)?;
            let tf_zeta = tangent_lift(|a| f.eval(a), &zeta_flat(x))?;
            out.push(sub(&tf_zeta, &zeta_flat(&fx)));
            let tf = tangent_lift(|a| f.eval(a), p)?;
            out.push(sub(&tau_flat(&tf), &fx));
            let lhs = tangent_lift(|a| f.eval(a), &self.mu(xi)?)?;
            let rhs = self.mu(&second_tangent_lift(|a| f.eval(a), xi)?)?;
            out.push(sub(&lhs, &rhs));
        }
        Ok(out)
    }
}

pub fn verify_monad_laws(cfg: &LawConfig, maps: &[ChartMap]) -> Result<Report> {
    verify_monad_laws_with(cfg, maps, &T2Map::mu())
}

/// Checks the unit laws, associativity on `T³`, and naturality of `ζ`, `τ`
/// and `μ` against each map, with `mu` as the multiplication.
pub fn verify_monad_laws_with(cfg: &LawConfig, maps: &[ChartMap], mu: &T2Map) -> Result<Report> {
    let n = cfg.dim;
    if n == 0 {
        return Err(Error::Precondition("dimension must be positive".into()));
    }
    for f in maps {
        if f.input_dim() != n || f.output_dim() != n {
            return Err(Error::Shape(format!(
                "naturality maps must be endomorphisms of R^{n}, got {} -> {}",
                f.input_dim(),
                f.output_dim()
            )));
        }
    }
    let (mu_n, mu_2n) = (mu.component(n)?, mu.component(2 * n)?);
    if cfg.backend == Backend::Rational {
        for f in maps.iter().chain([&mu_n, &mu_2n]) {
            if !f.is_rational() {
                return Err(Error::Backend(format!(
                    "rational (map {:?} is transcendental)",
                    f.expr_strings()
                )));
            }
        }
    }
    let ctx = LawContext {
        n,
        mu_n,
        mu_2n,
        maps: maps.to_vec(),
    };
    let tolerance = cfg.tolerance.unwrap_or(match cfg.backend {
        Backend::Rational => 0.0,
        Backend::Float if maps.iter().all(ChartMap::is_rational) => TOL_FLOAT_POLY,
        Backend::Float => TOL_FLOAT_TRANSCENDENTAL,
    });
    let base_box = maps.first().map(|f| f.domain().clone()).unwrap_or_else(|| DomainBox::cube(n, -1.0, 1.0));
    let generate = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut s = sampling::uniform_box(rng, &base_box);
        s.extend(sampling::uniform_cube(rng, 7 * n, 1.0));
        if cfg.backend == Backend::Rational {
            snap_all(&mut s);
        }
        s
    };
    let mut names: Vec<String> = CORE_LAWS.iter().map(|s| s.to_string()).collect();
    for (k, _) in maps.iter().enumerate() {
        for law in ["naturality_zeta", "naturality_tau", "naturality_mu"] {
            names.push(format!("{law}[f{}]", k + 1));
        }
    }
    let mut builders: Vec<_> = names.iter().map(|nm| Check::new(nm, cfg.backend, tolerance)).collect();
    match cfg.backend {
        Backend::Rational => {
            let out = run_sampled(cfg.samples, cfg.seed, generate, |s| ctx.residuals(&to_rationals(s)))?;
            for (pt, res) in &out.accepted {
                for (b, r) in builders.iter_mut().zip(res) {
                    b.record(pt, r);
                }
            }
            builders = builders.into_iter().map(|b| b.rejected(out.rejected)).collect();
        }
        Backend::Float => {
            let out = run_sampled(cfg.samples, cfg.seed, generate, |s| ctx.residuals(s))?;
            for (pt, res) in &out.accepted {
                for (b, r) in builders.iter_mut().zip(res) {
                    b.record(pt, r);
                }
            }
            builders = builders.into_iter().map(|b| b.rejected(out.rejected)).collect();
        }
    }
    let checks = builders.into_iter().map(|b| b.finish()).collect();
    Ok(Report::new("monad laws", checks).with_details(json!({
        "dim": n,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "backend": cfg.backend,
        "multiplication": mu.name(),
        "maps": maps.iter().map(ChartMap::expr_strings).collect::<Vec<_>>(),
    })))
}

/// Result of fitting a family `T²ℝⁿ → Tℝⁿ` to `a τT + b Tτ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Fit {
    Exact { a: Rational, b: Rational },
    Approximate { a: f64, b: f64, residual: f64 },
    Mismatch { residual: f64, dim: usize },
}

pub const FIT_FLOAT_TOL: f64 = 1e-9;

/// Least-squares fit of `(x, v, ẋ, v̇) ↦ (x, a v + b ẋ)` over dimensions
/// `1..=max_dim`, exact when every component is rational.
pub fn fit_t2_to_t(candidate: &T2Map, max_dim: usize, samples: usize, seed: u64) -> Result<Fit> {
    let comps: Vec<ChartMap> = (1..=max_dim).map(|n| candidate.component(n)).collect::<Result<_>>()?;
    let exact = comps.iter().all(ChartMap::is_rational);
    let mut rng = sampling::rng(seed);
    let mut data: Vec<(usize, Vec<f64>)> = Vec::new();
    for n in 1..=max_dim {
        for _ in 0..samples {
            let mut s = sampling::uniform_cube(&mut rng, 4 * n, 1.0);
            snap_all(&mut s);
            data.push((n, s));
        }
    }
    if exact {
        fit_exact(&comps, &data)
    } else {
        fit_float(&comps, &data)
    }
}

fn fit_exact(comps: &[ChartMap], data: &[(usize, Vec<f64>)]) -> Result<Fit> {
    let zero = Rational::zero;
    let (mut svv, mut svx, mut sxx, mut svo, mut sxo) = (zero(), zero(), zero(), zero(), zero());
    let mut evals = Vec::with_capacity(data.len());
    for (n, s) in data {
        let q = to_rationals(s);
        let out = comps[n - 1].eval_unchecked(&q)?;
        for i in 0..*n {
            let (v, xd, o) = (&q[n + i], &q[2 * n + i], &out[n + i]);
            svv += v * v;
            svx += v * xd;
            sxx += xd * xd;
            svo += v * o;
            sxo += xd * o;
        }
        evals.push((*n, q, out));
    }
    let det = &svv * &sxx - &svx * &svx;
    if det.is_zero() {
        return Err(Error::Precondition("degenerate samples for the fit".into()));
    }
    let a = (&svo * &sxx - &svx * &sxo) / &det;
    let b = (&svv * &sxo - &svx * &svo) / &det;
    let mut worst = (Rational::zero(), 0usize);
    for (n, q, out) in &evals {
        for i in 0..*n {
            let base = (&out[i] - &q[i]).abs();
            let fiber = (&out[n + i] - (&a * &q[n + i] + &b * &q[2 * n + i])).abs();
            for r in [base, fiber] {
                if r > worst.0 {
                    worst = (r, *n);
                }
            }
        }
    }
    if worst.0.is_zero() {
        Ok(Fit::Exact { a, b })
    } else {
        Ok(Fit::Mismatch {
            residual: rational_to_f64(&worst.0),
            dim: worst.1,
        })
    }
}

fn fit_float(comps: &[ChartMap], data: &[(usize, Vec<f64>)]) -> Result<Fit> {
    let (mut svv, mut svx, mut sxx, mut svo, mut sxo) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut evals = Vec::with_capacity(data.len());
    for (n, s) in data {
        let out = comps[n - 1].eval_unchecked(s)?;
        for i in 0..*n {
            let (v, xd, o) = (s[n + i], s[2 * n + i], out[n + i]);
            svv += v * v;
            svx += v * xd;
            sxx += xd * xd;
            svo += v * o;
            sxo += xd * o;
        }
        evals.push((*n, s, out));
    }
    let det = svv * sxx - svx * svx;
    let a = (svo * sxx - svx * sxo) / det;
    let b = (svv * sxo - svx * svo) / det;
    let mut worst = (0.0f64, 0usize);
    for (n, s, out) in &evals {
        for i in 0..*n {
            let r = (out[i] - s[i]).abs().max((out[n + i] - (a * s[n + i] + b * s[2 * n + i])).abs());
            if r > worst.0 || r.is_nan() {
                worst = (r, *n);
            }
        }
    }
    if worst.0 <= FIT_FLOAT_TOL {
        Ok(Fit::Approximate { a, b, residual: worst.0 })
    } else {
        Ok(Fit::Mismatch {
            residual: worst.0,
            dim: worst.1,
        })
    }
}

/// Both sides of naturality of `δᵇ(x,v) = (x,v,v,bv)` under `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalityWitness {
    pub map: Vec<String>,
    pub b: String,
    pub point: Vec<String>,
    /// `T²f(δᵇ(x, v))`
    pub lhs: Vec<String>,
    /// `δᵇ(Tf(x, v))`
    pub rhs: Vec<String>,
    pub gap: Vec<String>,
    #[serde(skip)]
    pub gap_exact: Vec<Rational>,
}

pub fn naturality_gap(f: &ChartMap, b: &Rational, x: &[Rational], v: &[Rational]) -> Result<NaturalityWitness> {
    if !f.is_rational() {
        return Err(Error::Backend("rational (map is transcendental)".into()));
    }
    let p = [x.to_vec(), v.to_vec()].concat();
    let lhs = second_tangent_lift(|a| f.eval(a), &delta_b(&p, b))?;
    let rhs = delta_b(&tangent_lift(|a| f.eval(a), &p)?, b);
    let gap = sub(&lhs, &rhs);
    let fmt = |v: &[Rational]| v.iter().map(crate::scalar::format_rational).collect::<Vec<_>>();
    Ok(NaturalityWitness {
        map: f.expr_strings(),
        b: crate::scalar::format_rational(b),
        point: fmt(&p),
        lhs: fmt(&lhs),
        rhs: fmt(&rhs),
        gap: fmt(&gap),
        gap_exact: gap,
    })
}

/// The obstruction to a comonad on `T`: `f(x) = x + x²` at `(0, 1)`.
pub fn comonad_naturality_witness(b: &Rational) -> Result<NaturalityWitness> {
    let f = ChartMap::parse(&["x"], &["x + x^2"], DomainBox::cube(1, -1.0, 1.0))?;
    naturality_gap(&f, b, &[Rational::zero()], &[crate::scalar::int(1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn q(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn structure_maps_in_charts() {
        assert_eq!(zero_section(&q(&[1, 2])), TangentPoint::new(q(&[1, 2]), q(&[0, 0])));
        let xi = T2Point::new(q(&[1]), q(&[2]), q(&[3]), q(&[4]));
        assert_eq!(mu(&xi), TangentPoint::new(q(&[1]), q(&[5])));
        assert_eq!(mu_flat(&q(&[7, 2, 0, 0])), q(&[7, 2]));
        assert_eq!(mu_flat(&q(&[7, 0, 2, 0])), q(&[7, 2]));
    }

    #[test]
    fn both_associativity_paths_give_the_sum() {
        // (x,v,ẋ,v̇,x′,v′,ẋ′,v̇′) = (1..8)
        let s = q(&[1, 2, 3, 4, 5, 6, 7, 8]);
        let via_mu_t = mu_flat(&mu_flat(&s));
        let via_t_mu = mu_flat(&tangent_lift(|a| Ok(mu_flat(a)), &s).unwrap());
        assert_eq!(via_mu_t, q(&[1, 2 + 3 + 5]));
        assert_eq!(via_t_mu, via_mu_t);
    }

    #[test]
    fn tangent_maps_of_the_square() {
        let f = ChartMap::parse(&["x"], &["x^2"], DomainBox::cube(1, -10.0, 10.0)).unwrap();
        let p = tangent_map(&f, &TangentPoint::new(q(&[3]), q(&[1]))).unwrap();
        assert_eq!(p.flat(), q(&[9, 6]));
        let xi = second_tangent_map(&f, &T2Point::new(q(&[1]), q(&[2]), q(&[3]), q(&[4]))).unwrap();
        assert_eq!(xi.flat(), q(&[1, 4, 6, 20]));
        let lin = ChartMap::parse(&["x"], &["3*x"], DomainBox::cube(1, -10.0, 10.0)).unwrap();
        let xi = second_tangent_map(&lin, &T2Point::new(q(&[1]), q(&[2]), q(&[3]), q(&[4]))).unwrap();
        assert_eq!(xi.vdot, q(&[12]));
    }

    #[test]
    fn exact_laws_hold() {
        for dim in 1..=2 {
            let cfg = LawConfig::new(dim, 40, 1, Backend::Rational);
            let r = verify_monad_laws(&cfg, &default_panel(dim, Backend::Rational)).unwrap();
            assert!(r.passed, "{r:#?}");
            assert!(r.checks.iter().all(|c| c.max_residual == 0.0));
        }
    }

    #[test]
    fn wrong_multiplication_breaks_a_unit_law() {
        let wrong = T2Map::coordinatewise("wrong", |i| (format!("x{i}"), format!("v{i} + 2*xd{i}")));
        let cfg = LawConfig::new(2, 30, 5, Backend::Rational);
        let r = verify_monad_laws_with(&cfg, &[], &wrong).unwrap();
        assert!(r.check("unit_mu_zetaT").unwrap().passed);
        let c = r.check("unit_mu_Tzeta").unwrap();
        assert!(!c.passed);
        // residual is the v block of (x, 2v) - (x, v)
        let w = c.witness.as_ref().unwrap();
        let vmax = w.point[2..4].iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert_eq!(w.residual, vmax);
    }

    #[test]
    fn rational_backend_refuses_transcendental_maps() {
        let cfg = LawConfig::new(1, 5, 1, Backend::Rational);
        let err = verify_monad_laws(&cfg, &default_panel(1, Backend::Float)).unwrap_err();
        assert!(matches!(err, Error::Backend(_)));
    }

    #[test]
    fn fits() {
        assert_eq!(
            fit_t2_to_t(&T2Map::combination(&int(2), &int(3)), 3, 10, 1).unwrap(),
            Fit::Exact { a: int(2), b: int(3) }
        );
        assert_eq!(fit_t2_to_t(&T2Map::mu(), 3, 10, 1).unwrap(), Fit::Exact { a: int(1), b: int(1) });
        let tau_t = T2Map::coordinatewise("tauT", |i| (format!("x{i}"), format!("v{i}")));
        assert_eq!(fit_t2_to_t(&tau_t, 3, 10, 1).unwrap(), Fit::Exact { a: int(1), b: int(0) });
        let bad = T2Map::coordinatewise("vdot", |i| (format!("x{i}"), format!("vd{i}")));
        assert!(matches!(fit_t2_to_t(&bad, 3, 10, 1).unwrap(), Fit::Mismatch { .. }));
    }

    #[test]
    fn comonad_witness_gap_is_two() {
        for b in [int(0), int(5), rat(-7, 3)] {
            let w = comonad_naturality_witness(&b).unwrap();
            assert_eq!(w.gap_exact, q(&[0, 0, 0, 2]));
            assert_eq!(w.lhs[3], crate::scalar::format_rational(&(b.clone() + int(2))));
        }
        let lin = ChartMap::parse(&["x"], &["4*x - 1"], DomainBox::cube(1, -1.0, 1.0)).unwrap();
        let w = naturality_gap(&lin, &int(3), &q(&[1]), &q(&[2])).unwrap();
        assert!(w.gap_exact.iter().all(Zero::is_zero));
    }
}
