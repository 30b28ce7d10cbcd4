//! Monads `μᵃ`, comonads `δᵇ`, their bimonad and Hopf structure, and Hopf
//! modules on `K²`, all over exact rationals.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, EvalError, Result};
use crate::linalg::MatrixQ;
use crate::monad::{sub, tangent_lift, tau_flat, zeta_flat};
use crate::report::{Check, Report};
use crate::sampling::{self, run_sampled, snap_all, to_rationals};
use crate::scalar::{format_rational, int, rat, Backend, Rational, Scalar};

/// `μᵃ(x, v, ẋ, v̇) = (x, v + ẋ + a v̇)`; block length `p.len() / 4`.
pub fn mu_a<S: Scalar>(p: &[S], a: &S) -> Vec<S> {
    let n = p.len() / 4;
    let mut out = p[..n].to_vec();
    out.extend((0..n).map(|i| p[n + i].clone() + p[2 * n + i].clone() + a.clone() * p[3 * n + i].clone()));
    out
}

/// `δᵇ(x, v) = (x, v, v, b v)`; block length `p.len() / 2`.
pub fn delta_b<S: Scalar>(p: &[S], b: &S) -> Vec<S> {
    let n = p.len() / 2;
    let v = &p[n..];
    let mut out = p.to_vec();
    out.extend_from_slice(v);
    out.extend(v.iter().map(|vi| b.clone() * vi.clone()));
    out
}

/// The entwining `λ(x, v, ẋ, v̇) = (x, ẋ, v + ẋ + a v̇, b ẋ − v̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Entwining {
    pub a: Rational,
    pub b: Rational,
    /// Flips the sign of the last block; used to show the compatibility
    /// square detects a wrong entwining.
    pub perturbed: bool,
}

impl Entwining {
    pub fn new(a: Rational, b: Rational) -> Self {
        Entwining { a, b, perturbed: false }
    }

    pub fn apply<S: Scalar>(&self, p: &[S]) -> Vec<S> {
        let n = p.len() / 4;
        let proto = &p[0];
        let (a, b) = (proto.constant(&self.a), proto.constant(&self.b));
        let (x, v, xd, vd) = (&p[..n], &p[n..2 * n], &p[2 * n..3 * n], &p[3 * n..]);
        let mut out = x.to_vec();
        out.extend_from_slice(xd);
        out.extend((0..n).map(|i| v[i].clone() + xd[i].clone() + a.clone() * vd[i].clone()));
        out.extend((0..n).map(|i| {
            let last = b.clone() * xd[i].clone() - vd[i].clone();
            if self.perturbed {
                -last
            } else {
                last
            }
        }));
        out
    }
}

/// Fiberwise scaling `σ(x, v) = (x, t v)`.
pub fn sigma<S: Scalar>(p: &[S], t: &S) -> Vec<S> {
    let n = p.len() / 2;
    let mut out = p[..n].to_vec();
    out.extend(p[n..].iter().map(|v| t.clone() * v.clone()));
    out
}

/// `t = −1/(1 + ab)`.
pub fn antipode(a: &Rational, b: &Rational) -> Result<Rational> {
    let d = Rational::one() + a * b;
    if d.is_zero() {
        Err(Error::NoAntipode)
    } else {
        Ok(-d.recip())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConfig {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
}

fn exact_sampled<F>(cfg: &AffineConfig, width: usize, names: &[&str], f: F) -> Result<Vec<Check>>
where
    F: Fn(&[Rational]) -> Result<Vec<Vec<Rational>>, EvalError> + Sync,
{
    let generate = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut s = sampling::uniform_cube(rng, width, 2.0);
        snap_all(&mut s);
        s
    };
    let out = run_sampled(cfg.samples, cfg.seed, generate, |s| f(&to_rationals(s)))?;
    let mut builders: Vec<_> = names.iter().map(|n| Check::new(*n, Backend::Rational, 0.0)).collect();
    for (pt, res) in &out.accepted {
        for (b, r) in builders.iter_mut().zip(res) {
            b.record(pt, r);
        }
    }
    Ok(builders.into_iter().map(|b| b.rejected(out.rejected).finish()).collect())
}

/// Monad laws of `μᵃ`, comonad laws of `δᵇ`, the compatibility square
/// `δᵇ∘μᵃ = Tμᵃ∘λT∘Tδᵇ` and the three structural diagrams.
pub fn verify_affine_laws(a: &Rational, b: &Rational, cfg: &AffineConfig) -> Result<Report> {
    verify_affine_laws_with(&Entwining::new(a.clone(), b.clone()), cfg)
}

pub fn verify_affine_laws_with(lambda: &Entwining, cfg: &AffineConfig) -> Result<Report> {
    let n = cfg.dim;
    let (a, b) = (&lambda.a, &lambda.b);
    let names = [
        "unit_mu_zetaT",
        "unit_mu_Tzeta",
        "associativity",
        "counit_tauT_delta",
        "counit_Ttau_delta",
        "coassociativity",
        "compatibility",
        "tau_monad_morphism",
        "zeta_comonad_morphism",
        "tau_zeta",
    ];
    let checks = exact_sampled(cfg, 8 * n, &names, |s| {
        let x = &s[..n];
        let p = &s[..2 * n];
        let xi = &s[..4 * n];
        let mu = |q: &[Rational]| mu_a(q, a);
        let delta = |q: &[Rational]| delta_b(q, b);
        let mut out = Vec::new();
        out.push(sub(&mu(&zeta_flat(p)), p));
        out.push(sub(&mu(&tangent_lift(|w| Ok(zeta_flat(w)), p)?), p));
        let left = mu(&mu(s));
        let right = mu(&tangent_lift(|w| Ok(mu_a(w, &w[0].constant(a))), s)?);
        out.push(sub(&left, &right));
        out.push(sub(&tau_flat(&delta(p)), p));
        out.push(sub(&tangent_lift(|w| Ok(tau_flat(w)), &delta(p))?, p));
        let left = delta(&delta(p));
        let right = tangent_lift(|w| Ok(delta_b(w, &w[0].constant(b))), &delta(p))?;
        out.push(sub(&left, &right));
        let left = delta(&mu(xi));
        let t_delta = tangent_lift(|w| Ok(delta_b(w, &w[0].constant(b))), xi)?;
        let lambda_t = lambda.apply(&t_delta);
        let right = tangent_lift(|w| Ok(mu_a(w, &w[0].constant(a))), &lambda_t)?;
        out.push(sub(&left, &right));
        let left = tau_flat(&mu(xi));
        let right = tau_flat(&tangent_lift(|w| Ok(tau_flat(w)), xi)?);
        out.push(sub(&left, &right));
        out.push(sub(&delta(&zeta_flat(x)), &zeta_flat(&zeta_flat(x))));
        out.push(sub(&tau_flat(&zeta_flat(x)), x));
        Ok(out)
    })?;
    Ok(Report::new("affine bimonad laws", checks).with_details(json!({
        "a": format_rational(a),
        "b": format_rational(b),
        "perturbed_entwining": lambda.perturbed,
        "dim": n,
        "samples": cfg.samples,
        "seed": cfg.seed,
    })))
}

/// `μᵃ∘σT∘δᵇ = μᵃ∘Tσ∘δᵇ = ζ∘τ` with `σ` the antipode.
pub fn verify_antipode(a: &Rational, b: &Rational, cfg: &AffineConfig) -> Result<Report> {
    let t = antipode(a, b)?;
    let n = cfg.dim;
    let checks = exact_sampled(cfg, 2 * n, &["antipode_sigmaT", "antipode_Tsigma"], |p| {
        let d = delta_b(p, b);
        let target = zeta_flat(&tau_flat(p));
        let sigma_t = sigma(&d, &t);
        let t_sigma = tangent_lift(|w| Ok(sigma(w, &w[0].constant(&t))), &d)?;
        Ok(vec![sub(&mu_a(&sigma_t, a), &target), sub(&mu_a(&t_sigma, a), &target)])
    })?;
    Ok(Report::new("antipode", checks).with_details(json!({
        "a": format_rational(a),
        "b": format_rational(b),
        "t": format_rational(&t),
    })))
}

/// Which identities a Hopf-module candidate satisfies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopfModuleCheck {
    pub a_squared: bool,
    pub b_squared: bool,
    pub mixed: bool,
    pub eigen: bool,
}

impl HopfModuleCheck {
    pub fn holds(&self) -> bool {
        self.a_squared && self.b_squared && self.mixed && self.eigen
    }
}

fn require_2x2(m: &MatrixQ, what: &str) -> Result<()> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::Shape(format!("{what} must be 2x2, got {}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// `A² = aA`, `B² = bB`, `(A−a)B + (B−b)A = I` and `BX₀ = bX₀`.
pub fn hopf_module_identities(a: &Rational, b: &Rational, am: &MatrixQ, bm: &MatrixQ, x0: &[Rational]) -> Result<HopfModuleCheck> {
    require_2x2(am, "A")?;
    require_2x2(bm, "B")?;
    if x0.len() != 2 {
        return Err(Error::Shape("X0 must have two entries".into()));
    }
    let id = MatrixQ::identity(2);
    let a_i = id.scale(a);
    let b_i = id.scale(b);
    let mixed = &(&(am - &a_i) * bm) + &(&(bm - &b_i) * am);
    let bx = bm.mul_vec(x0);
    Ok(HopfModuleCheck {
        a_squared: am * am == am.scale(a),
        b_squared: bm * bm == bm.scale(b),
        mixed: mixed == id,
        eigen: bx.iter().zip(x0).all(|(l, r)| *l == b * r),
    })
}

pub fn hopf_module_check(a: &Rational, b: &Rational, am: &MatrixQ, bm: &MatrixQ, x0: &[Rational]) -> Result<bool> {
    Ok(hopf_module_identities(a, b, am, bm, x0)?.holds())
}

/// `BX₀ = bX₀` and `B² = bB`.
pub fn affine_coalgebra_check(x0: &[Rational], bm: &MatrixQ, b: &Rational) -> Result<bool> {
    if !bm.is_square() || bm.rows() != x0.len() {
        return Err(Error::Shape("B must be square with the size of X0".into()));
    }
    let bx = bm.mul_vec(x0);
    Ok(bx.iter().zip(x0).all(|(l, r)| *l == b * r) && bm * bm == bm.scale(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `a = 0`, `A = [[0,1],[0,0]]`, `B = [[t, t(b−t)],[1, b−t]]`, `X₀ ∈ K(t,1)`.
    Nilpotent,
    /// `A = 0`, `B = b I`, any `X₀`; needs `ab + 1 = 0`.
    ZeroA,
    /// `A = a I`, `B = 0`, `X₀ = 0`; needs `ab + 1 = 0`.
    ScalarA,
    /// `A = diag(a,0)`, `ab + 1 = 0`, `B = [[0,0],[t,b]]`, `X₀ ∈ K(0,1)`.
    DiagonalLower,
    /// `A = diag(a,0)`, `ab + 1 = 0`, `B = [[0,t],[0,b]]`, `X₀ ∈ K(t,b)`.
    DiagonalUpper,
    /// `A = diag(a,0)`, `ab + 1 ≠ 0`, `B = [[1/a+b, 1/a+b],[−1/a, −1/a]]`, `X₀ ∈ K(ab+1, −1)`.
    DiagonalGeneric,
}

/// One parametric family of Hopf modules on `K²` (up to change of basis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfFamily {
    pub kind: FamilyKind,
    /// `"classification"` for the published case list, `"completion"` for
    /// solutions found beyond it.
    pub origin: String,
    #[serde(with = "crate::scalar::serde_rational")]
    pub a: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub b: Rational,
    pub parameter: Option<String>,
    pub matrix_a: [[String; 2]; 2],
    pub matrix_b: [[String; 2]; 2],
    /// Spanning vectors of the admissible `X₀`; `"any"` for the whole plane.
    pub x0: String,
}

/// A concrete member of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfModule2D {
    pub a: Rational,
    pub b: Rational,
    pub matrix_a: MatrixQ,
    pub matrix_b: MatrixQ,
    /// Basis of the admissible `X₀` (empty: only 0).
    pub x0_basis: Vec<Vec<Rational>>,
}

impl HopfFamily {
    fn new(kind: FamilyKind, a: &Rational, b: &Rational) -> Self {
        let s = |r: Rational| format_rational(&r);
        let (a_s, b_s) = (s(a.clone()), s(b.clone()));
        let z = || "0".to_string();
        let (origin, parameter, matrix_a, matrix_b, x0) = match kind {
            FamilyKind::Nilpotent => (
                "classification",
                Some("t"),
                [[z(), "1".into()], [z(), z()]],
                [["t".into(), format!("t*({b_s} - t)")], ["1".into(), format!("{b_s} - t")]],
                "span(t, 1)".to_string(),
            ),
            FamilyKind::ZeroA => (
                "classification",
                None,
                [[z(), z()], [z(), z()]],
                [[b_s.clone(), z()], [z(), b_s.clone()]],
                "any".to_string(),
            ),
            FamilyKind::ScalarA => (
                "classification",
                None,
                [[a_s.clone(), z()], [z(), a_s.clone()]],
                [[z(), z()], [z(), z()]],
                "0".to_string(),
            ),
            FamilyKind::DiagonalLower => (
                "classification",
                Some("t"),
                [[a_s.clone(), z()], [z(), z()]],
                [[z(), z()], ["t".into(), b_s.clone()]],
                "span(0, 1)".to_string(),
            ),
            FamilyKind::DiagonalUpper => (
                "completion",
                Some("t"),
                [[a_s.clone(), z()], [z(), z()]],
                [[z(), "t".into()], [z(), b_s.clone()]],
                format!("span(t, {b_s})"),
            ),
            FamilyKind::DiagonalGeneric => {
                let p = s(a.recip() + b);
                let q = s(-a.recip());
                (
                    "classification",
                    None,
                    [[a_s.clone(), z()], [z(), z()]],
                    [[p.clone(), p], [q.clone(), q]],
                    format!("span({}, -1)", s(a * b + Rational::one())),
                )
            }
        };
        HopfFamily {
            kind,
            origin: origin.to_string(),
            a: a.clone(),
            b: b.clone(),
            parameter: parameter.map(str::to_string),
            matrix_a,
            matrix_b,
            x0,
        }
    }

    pub fn instantiate(&self, t: &Rational) -> HopfModule2D {
        let (a, b) = (&self.a, &self.b);
        let m = |rows: [[Rational; 2]; 2]| MatrixQ::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("2x2");
        let z = Rational::zero;
        let o = Rational::one;
        let (am, bm, x0_basis) = match self.kind {
            FamilyKind::Nilpotent => (
                m([[z(), o()], [z(), z()]]),
                m([[t.clone(), t * (b - t)], [o(), b - t]]),
                vec![vec![t.clone(), o()]],
            ),
            FamilyKind::ZeroA => (
                MatrixQ::zeros(2, 2),
                MatrixQ::identity(2).scale(b),
                vec![vec![o(), z()], vec![z(), o()]],
            ),
            FamilyKind::ScalarA => (MatrixQ::identity(2).scale(a), MatrixQ::zeros(2, 2), vec![]),
            FamilyKind::DiagonalLower => (
                m([[a.clone(), z()], [z(), z()]]),
                m([[z(), z()], [t.clone(), b.clone()]]),
                vec![vec![z(), o()]],
            ),
            FamilyKind::DiagonalUpper => {
                let span = if t.is_zero() && b.is_zero() { vec![] } else { vec![vec![t.clone(), b.clone()]] };
                (m([[a.clone(), z()], [z(), z()]]), m([[z(), t.clone()], [z(), b.clone()]]), span)
            }
            FamilyKind::DiagonalGeneric => {
                let p = a.recip() + b;
                let q = -a.recip();
                (
                    m([[a.clone(), z()], [z(), z()]]),
                    m([[p.clone(), p], [q.clone(), q]]),
                    vec![vec![a * b + o(), -o()]],
                )
            }
        };
        HopfModule2D {
            a: a.clone(),
            b: b.clone(),
            matrix_a: am,
            matrix_b: bm,
            x0_basis,
        }
    }
}

/// The case analysis of Hopf modules on `K²` for given `(a, b)`.
pub fn classify_hopf_modules_2d(a: &Rational, b: &Rational) -> Vec<HopfFamily> {
    let degenerate = (Rational::one() + a * b).is_zero();
    let kinds: Vec<FamilyKind> = if a.is_zero() {
        vec![FamilyKind::Nilpotent]
    } else if degenerate {
        vec![
            FamilyKind::ZeroA,
            FamilyKind::ScalarA,
            FamilyKind::DiagonalLower,
            FamilyKind::DiagonalUpper,
        ]
    } else {
        vec![FamilyKind::DiagonalGeneric]
    };
    kinds.into_iter().map(|k| HopfFamily::new(k, a, b)).collect()
}

/// The scan values `{-2, -1, -1/2, 0, 1/2, 1, 2}`.
pub fn lattice() -> Vec<Rational> {
    let mut v: Vec<Rational> = (-2..=2).map(int).chain([rat(-1, 2), rat(1, 2)]).collect();
    v.sort();
    v
}

fn in_span(x: &[Rational], basis: &[Vec<Rational>]) -> bool {
    if x.iter().all(Zero::is_zero) {
        return true;
    }
    match basis.len() {
        0 => false,
        1 => {
            let u = &basis[0];
            &x[0] * &u[1] - &x[1] * &u[0] == Rational::zero()
        }
        _ => true,
    }
}

/// Conjugates `(A, B, X₀)` into the normal form of its case, or `None` if
/// no implemented normalization applies.
fn normalize(a: &Rational, am: &MatrixQ, bm: &MatrixQ, x0: &[Rational]) -> Option<(MatrixQ, MatrixQ, Vec<Rational>)> {
    let conj = |p: &MatrixQ| -> Option<(MatrixQ, MatrixQ, Vec<Rational>)> {
        let inv = p.inverse()?;
        Some((&(&inv * am) * p, &(&inv * bm) * p, inv.mul_vec(x0)))
    };
    if am.is_zero() || am == &MatrixQ::identity(2).scale(a) {
        return Some((am.clone(), bm.clone(), x0.to_vec()));
    }
    if am.rank() != 1 {
        return None;
    }
    let e = |i: usize| -> Vec<Rational> { (0..2).map(|k| if k == i { Rational::one() } else { Rational::zero() }).collect() };
    if a.is_zero() {
        // A nilpotent of rank 1: f2 with A f2 != 0, f1 = A f2
        let f2 = if am.mul_vec(&e(0)).iter().any(|c| !c.is_zero()) { e(0) } else { e(1) };
        let f1 = am.mul_vec(&f2);
        let p = MatrixQ::from_rows(vec![vec![f1[0].clone(), f2[0].clone()], vec![f1[1].clone(), f2[1].clone()]]).ok()?;
        return conj(&p);
    }
    // A² = aA of rank 1: f1 spans im A, f2 spans ker A
    let f1 = (0..2).map(|j| am.col(j)).find(|c| c.iter().any(|x| !x.is_zero()))?;
    let f2 = am.kernel().into_iter().next()?;
    let p = MatrixQ::from_rows(vec![vec![f1[0].clone(), f2[0].clone()], vec![f1[1].clone(), f2[1].clone()]]).ok()?;
    let (na, nb, nx) = conj(&p)?;
    if nb[(1, 0)].is_zero() {
        return Some((na, nb, nx));
    }
    // remaining freedom diag(1, d): make B[1][0] = -1/a
    let d = -(&nb[(1, 0)] * a);
    let mut dm = MatrixQ::identity(2);
    dm[(1, 1)] = d;
    let inv = dm.inverse()?;
    Some((na, &(&inv * &nb) * &dm, inv.mul_vec(&nx)))
}

/// Whether a Hopf module lies in one of the families after normalization.
pub fn family_of(a: &Rational, b: &Rational, am: &MatrixQ, bm: &MatrixQ, x0: &[Rational]) -> Option<FamilyKind> {
    let (na, nb, nx) = normalize(a, am, bm, x0)?;
    for fam in classify_hopf_modules_2d(a, b) {
        let t = match fam.kind {
            FamilyKind::Nilpotent => nb[(0, 0)].clone(),
            FamilyKind::DiagonalLower => nb[(1, 0)].clone(),
            FamilyKind::DiagonalUpper => nb[(0, 1)].clone(),
            _ => Rational::zero(),
        };
        let inst = fam.instantiate(&t);
        if inst.matrix_a == na && inst.matrix_b == nb && in_span(&nx, &inst.x0_basis) {
            return Some(fam.kind);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeScan {
    #[serde(with = "crate::scalar::serde_rational")]
    pub a: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub b: Rational,
    pub solutions: usize,
    pub per_family: Vec<(FamilyKind, usize)>,
    /// Solutions not matched by any family, as `(A, B, X0)` strings.
    pub unmatched: Vec<[String; 3]>,
}

/// Brute force over `A, B, X₀` with entries in [`lattice`].
pub fn lattice_scan(a: &Rational, b: &Rational) -> LatticeScan {
    let vals = lattice();
    let mut mats = Vec::new();
    for p in &vals {
        for q in &vals {
            for r in &vals {
                for s in &vals {
                    mats.push(MatrixQ::from_rows(vec![vec![p.clone(), q.clone()], vec![r.clone(), s.clone()]]).expect("2x2"));
                }
            }
        }
    }
    let idempotent = |m: &MatrixQ, c: &Rational| m * m == m.scale(c);
    let as_: Vec<&MatrixQ> = mats.iter().filter(|m| idempotent(m, a)).collect();
    let bs: Vec<&MatrixQ> = mats.iter().filter(|m| idempotent(m, b)).collect();
    let x0s: Vec<Vec<Rational>> = vals.iter().flat_map(|x| vals.iter().map(move |y| vec![x.clone(), y.clone()])).collect();
    let id = MatrixQ::identity(2);
    let found: Vec<(MatrixQ, MatrixQ, Vec<Rational>, Option<FamilyKind>)> = as_
        .par_iter()
        .flat_map_iter(|am| {
            let a_i = id.scale(a);
            let b_i = id.scale(b);
            let mut local = Vec::new();
            for bm in &bs {
                let mixed = &(&(*am - &a_i) * *bm) + &(&(*bm - &b_i) * *am);
                if mixed != id {
                    continue;
                }
                for x0 in &x0s {
                    let bx = bm.mul_vec(x0);
                    if bx.iter().zip(x0).all(|(l, r)| *l == b * r) {
                        let fam = family_of(a, b, am, bm, x0);
                        local.push(((*am).clone(), (*bm).clone(), x0.clone(), fam));
                    }
                }
            }
            local
        })
        .collect();
    let mut per_family: Vec<(FamilyKind, usize)> = Vec::new();
    let mut unmatched = Vec::new();
    for (am, bm, x0, fam) in &found {
        match fam {
            Some(k) => match per_family.iter_mut().find(|(f, _)| f == k) {
                Some(entry) => entry.1 += 1,
                None => per_family.push((*k, 1)),
            },
            None => unmatched.push([
                am.to_string(),
                bm.to_string(),
                format!("({}, {})", format_rational(&x0[0]), format_rational(&x0[1])),
            ]),
        }
    }
    LatticeScan {
        a: a.clone(),
        b: b.clone(),
        solutions: found.len(),
        per_family,
        unmatched,
    }
}

/// Every family instantiated at `values` must satisfy the identities for
/// every spanning `X₀` (and for `X₀ = 0`).
pub fn verify_families(a: &Rational, b: &Rational, values: &[Rational]) -> Result<Check> {
    let mut builder = Check::new("families_are_hopf_modules", Backend::Rational, 0.0);
    for fam in classify_hopf_modules_2d(a, b) {
        let params: Vec<Rational> = if fam.parameter.is_some() { values.to_vec() } else { vec![Rational::zero()] };
        for t in &params {
            let m = fam.instantiate(t);
            let mut xs = m.x0_basis.clone();
            xs.push(vec![Rational::zero(), Rational::zero()]);
            for x0 in xs {
                let ok = hopf_module_check(a, b, &m.matrix_a, &m.matrix_b, &x0)?;
                let pt = [crate::scalar::rational_to_f64(t)];
                builder.record_norm(&pt, if ok { 0.0 } else { 1.0 });
            }
        }
    }
    Ok(builder.finish())
}

/// Input of `hopf check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfModuleSpec {
    #[serde(with = "crate::scalar::serde_rational")]
    pub a: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub b: Rational,
    #[serde(rename = "A")]
    pub matrix_a: MatrixQ,
    #[serde(rename = "B")]
    pub matrix_b: MatrixQ,
    #[serde(rename = "X0", with = "rational_vec")]
    pub x0: Vec<Rational>,
}

mod rational_vec {
    use super::Rational;
    use crate::linalg::json_rational;
    use crate::scalar::format_rational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        raw.iter().map(|v| json_rational(v).map_err(D::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn cfg() -> AffineConfig {
        AffineConfig {
            dim: 2,
            samples: 25,
            seed: 9,
        }
    }

    #[test]
    fn chart_formulas() {
        assert_eq!(mu_a(&q(&[1, 2, 3, 4]), &int(2)), q(&[1, 13]));
        assert_eq!(mu_a(&q(&[1, 2, 3, 4]), &int(0)), q(&[1, 5]));
        assert_eq!(delta_b(&q(&[5, 0]), &int(7)), q(&[5, 0, 0, 0]));
        assert_eq!(delta_b(&q(&[5, 2]), &int(7)), q(&[5, 2, 2, 14]));
    }

    #[test]
    fn bimonad_laws_hold() {
        for (a, b) in [(int(0), int(0)), (int(2), int(-3)), (rat(1, 2), rat(5, 3))] {
            let r = verify_affine_laws(&a, &b, &cfg()).unwrap();
            assert!(r.passed, "{r:#?}");
        }
    }

    #[test]
    fn perturbed_entwining_breaks_compatibility() {
        let mut l = Entwining::new(int(1), int(2));
        l.perturbed = true;
        let r = verify_affine_laws_with(&l, &cfg()).unwrap();
        assert!(!r.check("compatibility").unwrap().passed);
        assert!(r.check("associativity").unwrap().passed);
    }

    #[test]
    fn antipodes() {
        assert_eq!(antipode(&int(0), &int(0)).unwrap(), int(-1));
        assert!(matches!(antipode(&int(1), &int(-1)), Err(Error::NoAntipode)));
        assert_eq!(antipode(&int(1), &int(1)).unwrap(), rat(-1, 2));
        assert!(verify_antipode(&int(1), &int(1), &cfg()).unwrap().passed);
        assert!(verify_antipode(&int(1), &int(-1), &cfg()).is_err());
    }

    #[test]
    fn module_examples() {
        let am = MatrixQ::from_ints(&[&[0, 1], &[0, 0]]);
        let bm = MatrixQ::from_ints(&[&[0, 0], &[1, 0]]);
        assert!(hopf_module_check(&int(0), &int(0), &am, &bm, &q(&[0, 1])).unwrap());
        assert!(!hopf_module_check(&int(0), &int(0), &am, &bm, &q(&[1, 0])).unwrap());
        // A = 0 forces ab + 1 = 0 and B = b I
        let z = MatrixQ::zeros(2, 2);
        assert!(hopf_module_check(&int(1), &int(-1), &z, &MatrixQ::identity(2).scale(&int(-1)), &q(&[3, 4])).unwrap());
        assert!(!hopf_module_check(&int(1), &int(1), &z, &MatrixQ::identity(2), &q(&[3, 4])).unwrap());
    }

    #[test]
    fn coalgebra_examples() {
        assert!(affine_coalgebra_check(&q(&[3, -1]), &MatrixQ::identity(2).scale(&int(5)), &int(5)).unwrap());
        assert!(affine_coalgebra_check(&q(&[1, 0]), &MatrixQ::from_ints(&[&[0, 1], &[0, 0]]), &int(0)).unwrap());
        assert!(!affine_coalgebra_check(&q(&[1, 0]), &MatrixQ::identity(2), &int(0)).unwrap());
    }

    #[test]
    fn families_pass_for_scanned_parameters() {
        let ts: Vec<Rational> = (-12..=12).map(|k| rat(k, 3)).collect();
        for (a, b) in [(int(0), int(1)), (int(1), int(-1)), (int(2), int(3)), (rat(-1, 2), int(2))] {
            assert!(verify_families(&a, &b, &ts).unwrap().passed, "a={a} b={b}");
        }
    }

    #[test]
    fn normalization_recovers_families() {
        // conjugate the nilpotent family by a non-trivial basis change
        let fam = &classify_hopf_modules_2d(&int(0), &int(1))[0];
        let m = fam.instantiate(&int(2));
        let p = MatrixQ::from_ints(&[&[1, 1], &[1, 2]]);
        let inv = p.inverse().unwrap();
        let am = &(&p * &m.matrix_a) * &inv;
        let bm = &(&p * &m.matrix_b) * &inv;
        let x0 = p.mul_vec(&m.x0_basis[0]);
        assert!(hopf_module_check(&int(0), &int(1), &am, &bm, &x0).unwrap());
        assert_eq!(family_of(&int(0), &int(1), &am, &bm, &x0), Some(FamilyKind::Nilpotent));
    }

    #[test]
    fn lattice_has_no_strays() {
        for (a, b) in [(int(0), int(0)), (int(0), int(1)), (int(1), int(-1)), (int(2), rat(-1, 2)), (int(1), int(1))] {
            let scan = lattice_scan(&a, &b);
            assert!(scan.solutions > 0, "a={a} b={b}");
            assert!(scan.unmatched.is_empty(), "a={a} b={b}: {:?}", scan.unmatched);
        }
    }
}
