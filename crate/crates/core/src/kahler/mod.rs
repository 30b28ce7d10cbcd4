//! The tangent comonad on polynomial algebras `A = ℚ[X₁..X_n]`.
//!
//! `T^k A` is the polynomial ring in `Var { index, mask }` with
//! `mask < 2^k`; bit `j` of the mask records the differential added at
//! level `j + 1`. So `TA = ℚ[X, dX]` and `T²A = ℚ[X, dX, d_TX, d_TdX]`,
//! with `d_TdX` a free generator of bidegree (1,1).

mod poly;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::report::{Check, Report};
use crate::sampling;
use crate::scalar::{Backend, Rational};

pub use poly::{Gen, Monomial, Poly};

/// An algebra morphism `T^src A → T^dst A` given on generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphism {
    pub n: usize,
    pub src: u32,
    pub dst: u32,
    images: BTreeMap<Gen, Poly>,
}

/// Generators of `T^level A` in `n` variables.
pub fn generators(n: usize, level: u32) -> Vec<Gen> {
    (0..1u32 << level)
        .flat_map(|mask| (0..n).map(move |index| Gen::Var { index, mask }))
        .collect()
}

fn in_level(p: &Poly, n: usize, level: u32) -> bool {
    p.gens().into_iter().all(|g| match g {
        Gen::Var { index, mask } => index < n && mask < 1 << level,
        _ => false,
    })
}

impl Morphism {
    pub fn from_images(n: usize, src: u32, dst: u32, images: BTreeMap<Gen, Poly>) -> Result<Self> {
        for g in generators(n, src) {
            let img = images.get(&g).ok_or_else(|| Error::Shape(format!("no image for generator {g}")))?;
            if !in_level(img, n, dst) {
                return Err(Error::Shape(format!("image of {g} is not in level {dst}: {img}")));
            }
        }
        if images.len() != n << src {
            return Err(Error::Shape(format!("expected {} generator images, got {}", n << src, images.len())));
        }
        Ok(Morphism { n, src, dst, images })
    }

    fn build(n: usize, src: u32, dst: u32, f: impl Fn(Gen) -> Poly) -> Self {
        let images = generators(n, src).into_iter().map(|g| (g, f(g))).collect();
        Morphism { n, src, dst, images }
    }

    pub fn identity(n: usize, level: u32) -> Self {
        Self::build(n, level, level, Poly::gen)
    }

    pub fn image(&self, g: Gen) -> Option<&Poly> {
        self.images.get(&g)
    }

    pub fn apply(&self, f: &Poly) -> Poly {
        f.substitute(|g| self.images.get(&g).cloned())
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Morphism) -> Result<Morphism> {
        if first.dst != self.src || first.n != self.n {
            return Err(Error::Shape(format!(
                "cannot compose level {}→{} after {}→{}",
                self.src, self.dst, first.src, first.dst
            )));
        }
        let images = first.images.iter().map(|(g, p)| (*g, self.apply(p))).collect();
        Ok(Morphism { n: self.n, src: first.src, dst: self.dst, images })
    }

    /// The tangent morphism `Tφ: T^{src+1} A → T^{dst+1} A`.
    pub fn tangent(&self) -> Morphism {
        let (src, dst) = (self.src, self.dst);
        Self::build(self.n, src + 1, dst + 1, |g| match g {
            Gen::Var { index, mask } if mask >> src & 1 == 1 => {
                let base = Gen::Var { index, mask: mask & !(1 << src) };
                level_differential(&self.images[&base], dst)
            }
            _ => self.images[&g].clone(),
        })
    }
}

/// The universal derivation out of `T^level A`, landing in `T^{level+1} A`.
pub fn level_differential(f: &Poly, level: u32) -> Poly {
    f.derive(|g| match g {
        Gen::Var { index, mask } if mask < 1 << level => Some(Poly::gen(Gen::Var { index, mask: mask | 1 << level })),
        _ => None,
    })
}

/// `df = Σ ∂f/∂Xᵢ dXᵢ`.
pub fn differential(f: &Poly) -> Poly {
    level_differential(f, 0)
}

/// `Tφ` for `φ: A → A` given by the images of `X₁..X_n`.
pub fn tangent_morphism(phi: &[Poly], n: usize) -> Result<Morphism> {
    if phi.len() != n {
        return Err(Error::Shape(format!("expected {n} generator images, got {}", phi.len())));
    }
    let images = phi.iter().enumerate().map(|(i, p)| (Gen::x(i), p.clone())).collect();
    Ok(Morphism::from_images(n, 0, 0, images)?.tangent())
}

/// Degree-0 truncation `TA → A`.
pub fn zeta(f: &Poly) -> Poly {
    f.part_of_degree(0)
}

/// Inclusion `A → TA`.
pub fn tau(f: &Poly) -> Poly {
    f.clone()
}

/// `ζ_{T^j A}: T^{j+1} A → T^j A`, killing the outermost differential.
pub fn zeta_at(n: usize, j: u32) -> Morphism {
    Morphism::build(n, j + 1, j, |g| match g {
        Gen::Var { mask, .. } if mask >> j & 1 == 1 => Poly::zero(),
        _ => Poly::gen(g),
    })
}

/// `μ_{T^j A}: T^{j+1} A → T^{j+2} A`, `da ↦ da + d_T a` on the outer level.
pub fn mu_at(n: usize, j: u32) -> Morphism {
    Morphism::build(n, j + 1, j + 2, |g| match g {
        Gen::Var { index, mask } if mask >> j & 1 == 1 => {
            let lifted = Gen::Var { index, mask: mask & !(1 << j) | 1 << (j + 1) };
            &Poly::gen(g) + &Poly::gen(lifted)
        }
        _ => Poly::gen(g),
    })
}

pub fn mu_a(f: &Poly, n: usize) -> Poly {
    mu_at(n, 0).apply(f)
}

/// `⊞: TA → TA ⊗_A TA`, the `A`-algebra morphism `dXᵢ ↦ dLᵢ + dRᵢ`.
pub fn coaddition(f: &Poly) -> Poly {
    f.substitute(|g| match g {
        Gen::Var { index, mask: 1 } => Some(&Poly::gen(Gen::Left(index)) + &Poly::gen(Gen::Right(index))),
        _ => None,
    })
}

/// `μ_A` computed as `τ_{TA} ⊞ Tτ_A`: the left factor lands on `dX`, the
/// right on `d_TX`.
pub fn mu_via_coaddition(f: &Poly) -> Poly {
    coaddition(f).substitute(|g| match g {
        Gen::Left(i) => Some(Poly::gen(Gen::dx(i))),
        Gen::Right(i) => Some(Poly::gen(Gen::dtx(i))),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComonadConfig {
    pub vars: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_degree: u32,
}

impl ComonadConfig {
    pub fn new(vars: usize) -> Self {
        ComonadConfig {
            vars,
            samples: 50,
            seed: sampling::DEFAULT_SEED,
            max_degree: 3,
        }
    }
}

fn record(b: &mut crate::report::CheckBuilder, k: usize, diff: &Poly) {
    b.record::<Rational>(&[k as f64], &diff.coefficients());
}

/// Counit laws, coassociativity, multiplicativity of `⊞` and the
/// factorisation of `μ_A` through `⊞`, all exactly.
pub fn verify_comonad(cfg: &ComonadConfig) -> Result<Report> {
    let n = cfg.vars;
    if n == 0 {
        return Err(Error::Precondition("need at least one variable".into()));
    }
    let mu = mu_at(n, 0);
    let zeta_t = zeta_at(n, 1);
    let t_zeta = zeta_at(n, 0).tangent();
    let mu_t = mu_at(n, 1);
    let t_mu = mu.tangent();
    let left = zeta_t.after(&mu)?;
    let right = t_zeta.after(&mu)?;
    let assoc_l = mu_t.after(&mu)?;
    let assoc_r = t_mu.after(&mu)?;

    let mut rng = sampling::rng(cfg.seed);
    let gens = generators(n, 1);
    let mut inputs: Vec<Poly> = gens.iter().map(|g| Poly::gen(*g)).collect();
    let n_gens = inputs.len();
    inputs.extend((0..cfg.samples).map(|_| Poly::random(&mut rng, &gens, cfg.max_degree, 4)));

    let mut c_left = Check::new("counit_zeta_t", Backend::Rational, 0.0);
    let mut c_right = Check::new("counit_t_zeta", Backend::Rational, 0.0);
    let mut c_assoc = Check::new("coassociativity", Backend::Rational, 0.0);
    let mut c_fact = Check::new("mu_factorization", Backend::Rational, 0.0);
    for (k, f) in inputs.iter().enumerate() {
        record(&mut c_left, k, &(&left.apply(f) - f));
        record(&mut c_right, k, &(&right.apply(f) - f));
        record(&mut c_assoc, k, &(&assoc_l.apply(f) - &assoc_r.apply(f)));
        record(&mut c_fact, k, &(&mu.apply(f) - &mu_via_coaddition(f)));
    }
    let mut c_mult = Check::new("coaddition_multiplicative", Backend::Rational, 0.0);
    for k in 0..cfg.samples {
        let f = Poly::random(&mut rng, &gens, cfg.max_degree, 4);
        let g = Poly::random(&mut rng, &gens, cfg.max_degree, 4);
        record(&mut c_mult, k, &(&coaddition(&(&f * &g)) - &(&coaddition(&f) * &coaddition(&g))));
    }
    Ok(Report::new(
        format!("tangent comonad on Q[X1..X{n}]"),
        vec![c_left.finish(), c_right.finish(), c_assoc.finish(), c_mult.finish(), c_fact.finish()],
    )
    .with_details(json!({
        "vars": n,
        "generator_checks": n_gens,
        "random_checks": cfg.samples,
        "max_degree": cfg.max_degree,
        "seed": cfg.seed,
    })))
}

/// `h(X) = X + (s + bX) dX` on `ℚ[X]`.
pub fn affine_family(s: &Rational, b: &Rational) -> Vec<Poly> {
    let p = &Poly::constant(s.clone()) + &Poly::x(0).scale(b);
    vec![&Poly::x(0) + &(&p * &Poly::dx(0))]
}

/// Checks `ζ_A ∘ h = id` and `Th ∘ h = μ_A ∘ h` for `h: A → TA`. With `b`
/// and a single variable of the form `h(X) = X + p(X) dX`, also reports the
/// chart condition `p′p = b p`.
pub fn coalgebra_check(h: &[Poly], b: Option<&Rational>) -> Result<Report> {
    let n = h.len();
    if n == 0 {
        return Err(Error::Precondition("need at least one variable".into()));
    }
    let images = h.iter().enumerate().map(|(i, p)| (Gen::x(i), p.clone())).collect();
    let hm = Morphism::from_images(n, 0, 1, images)?;
    let th_h = hm.tangent().after(&hm)?;
    let mu_h = mu_at(n, 0).after(&hm)?;

    let mut counit = Check::new("counit", Backend::Rational, 0.0);
    let mut coassoc = Check::new("coassociativity", Backend::Rational, 0.0);
    let mut residuals = Vec::new();
    for (i, hi) in h.iter().enumerate() {
        let x = Poly::x(i);
        record(&mut counit, i, &(&zeta(hi) - &x));
        let r = &th_h.apply(&x) - &mu_h.apply(&x);
        residuals.push(r.to_string());
        record(&mut coassoc, i, &r);
    }
    let mut checks = vec![counit.finish(), coassoc.finish()];
    let mut details = json!({
        "h": h.iter().map(Poly::to_string).collect::<Vec<_>>(),
        "coassociativity_residuals": residuals,
    });
    if let Some(b) = b {
        let c = match vector_field_of(h) {
            Some(p) => {
                let r = &(&p.partial(Gen::x(0)) * &p) - &p.scale(b);
                details["vector_field"] = json!(p.to_string());
                details["vector_field_residual"] = json!(r.to_string());
                let mut c = Check::new("vector_field", Backend::Rational, 0.0);
                record(&mut c, 0, &r);
                c.finish()
            }
            None => Check::fact("vector_field", Backend::Rational, false, "h is not of the form X + p(X) dX in one variable"),
        };
        checks.push(c);
    }
    Ok(Report::new("polynomial coalgebra", checks).with_details(details))
}

fn vector_field_of(h: &[Poly]) -> Option<Poly> {
    if h.len() != 1 {
        return None;
    }
    let rest = &h[0] - &Poly::x(0);
    let p = rest.partial(Gen::dx(0));
    (&p * &Poly::dx(0) == rest && in_level(&p, 1, 0)).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn p(s: &str) -> Poly {
        Poly::parse(s).unwrap()
    }

    #[test]
    fn differentials() {
        assert_eq!(differential(&p("X^2")), p("2*X*dX"));
        assert_eq!(differential(&p("X1*X2")), p("X2*dX1 + X1*dX2"));
        assert!(differential(&p("7/3")).is_zero());
    }

    #[test]
    fn tangent_morphisms() {
        let t = tangent_morphism(&[p("X^2")], 1).unwrap();
        assert_eq!(t.apply(&p("dX")), p("2*X*dX"));
        let id = tangent_morphism(&[p("X1"), p("X2")], 2).unwrap();
        assert_eq!(id, Morphism::identity(2, 1));
        assert!(tangent_morphism(&[p("X1")], 2).is_err());
    }

    #[test]
    fn tangent_is_functorial() {
        let mut rng = sampling::rng(7);
        let xs = generators(2, 0);
        for _ in 0..20 {
            let phi: Vec<Poly> = (0..2).map(|_| Poly::random(&mut rng, &xs, 2, 3)).collect();
            let psi: Vec<Poly> = (0..2).map(|_| Poly::random(&mut rng, &xs, 2, 3)).collect();
            let tphi = tangent_morphism(&phi, 2).unwrap();
            let tpsi = tangent_morphism(&psi, 2).unwrap();
            let phi_m = Morphism::from_images(2, 0, 0, phi.iter().cloned().enumerate().map(|(i, q)| (Gen::x(i), q)).collect()).unwrap();
            let psi_m = Morphism::from_images(2, 0, 0, psi.iter().cloned().enumerate().map(|(i, q)| (Gen::x(i), q)).collect()).unwrap();
            let composite = psi_m.after(&phi_m).unwrap().tangent();
            assert_eq!(tpsi.after(&tphi).unwrap(), composite);
        }
    }

    #[test]
    fn zeta_and_tau() {
        assert_eq!(zeta(&p("3 + 2*dX + X*dX^2")), p("3"));
        let mut rng = sampling::rng(3);
        for _ in 0..20 {
            let f = Poly::random(&mut rng, &generators(2, 0), 3, 4);
            assert_eq!(zeta(&tau(&f)), f);
        }
        assert_eq!(tau(&p("X^2")), p("X1^2"));
    }

    #[test]
    fn coaddition_examples() {
        assert_eq!(coaddition(&p("dX")), p("dL + dR"));
        assert_eq!(coaddition(&p("dX1*dX2")), p("dL1*dL2 + dL1*dR2 + dL2*dR1 + dR1*dR2"));
        assert_eq!(coaddition(&p("X*dX")), p("X*dL + X*dR"));
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_a(&p("dX"), 1), p("dX + dTX"));
        assert_eq!(mu_a(&p("X"), 1), p("X"));
        assert_eq!(mu_a(&p("dX1*dX2"), 2), p("(dX1 + dTX1)*(dX2 + dTX2)"));
    }

    #[test]
    fn comonad_laws_hold_exactly() {
        for n in 1..=3 {
            let r = verify_comonad(&ComonadConfig::new(n)).unwrap();
            assert!(r.passed, "{r:#?}");
        }
    }

    #[test]
    fn tangent_of_zeta_recovers_inner_differential() {
        let tz = zeta_at(1, 0).tangent();
        assert_eq!(tz.apply(&p("dTX")), p("dX"));
        assert!(tz.apply(&p("dTdX")).is_zero());
        assert!(tz.apply(&p("dX")).is_zero());
    }

    #[test]
    fn coalgebra_family() {
        let trivial = coalgebra_check(&affine_family(&int(0), &int(0)), Some(&int(0))).unwrap();
        assert!(trivial.passed);
        let r = coalgebra_check(&affine_family(&int(1), &rat(1, 2)), Some(&rat(1, 2))).unwrap();
        assert!(r.check("counit").unwrap().passed);
        assert!(r.check("vector_field").unwrap().passed);
        assert!(!r.check("coassociativity").unwrap().passed);
        let quad = coalgebra_check(&[p("X + X^2*dX")], Some(&int(0))).unwrap();
        assert!(!quad.check("coassociativity").unwrap().passed);
        assert!(!quad.check("vector_field").unwrap().passed);
    }

    #[test]
    fn counit_violation_is_reported() {
        let r = coalgebra_check(&[p("X + 1")], None).unwrap();
        assert!(!r.check("counit").unwrap().passed);
    }
}
