//! Seeded sampling with rejection of out-of-domain points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, EvalError, Result};
use crate::jets::DomainBox;
use crate::report::Check;
use crate::scalar::{int, Backend, Rational, Scalar};

pub const DEFAULT_SEED: u64 = 42;
/// Samples are snapped to multiples of `1 / GRID` so that float and exact
/// runs see the same points.
pub const GRID: i64 = 1024;
pub const REJECTION_FACTOR: usize = 10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn snap(x: f64) -> f64 {
    (x * GRID as f64).round() / GRID as f64
}

pub fn snap_all(x: &mut [f64]) {
    for v in x {
        *v = snap(*v);
    }
}

/// Exact value of a grid point produced by [`snap`].
pub fn grid_rational(x: f64) -> Rational {
    int((x * GRID as f64).round() as i64) / int(GRID)
}

pub fn to_rationals(x: &[f64]) -> Vec<Rational> {
    x.iter().map(|v| grid_rational(*v)).collect()
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..=hi)
}

pub fn uniform_box(rng: &mut impl Rng, b: &DomainBox) -> Vec<f64> {
    b.min.iter().zip(&b.max).map(|(lo, hi)| rng.gen_range(*lo..=*hi)).collect()
}

pub fn uniform_cube(rng: &mut impl Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..=half)).collect()
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform in the closed ball of the given radius.
pub fn uniform_ball(rng: &mut impl Rng, dim: usize, radius: f64) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    for x in &mut v {
        *x *= r / norm;
    }
    v
}

/// Accepted evaluations in generation order, plus the count of rejected draws.
#[derive(Debug, Clone)]
pub struct Sampled<P, R> {
    pub accepted: Vec<(P, R)>,
    pub rejected: usize,
}

/// Draws points sequentially from a seeded generator, evaluates them in
/// parallel, and keeps the first `requested` successes. Domain-type
/// evaluation errors are rejected and replaced; others propagate. Gives up
/// after `REJECTION_FACTOR * requested` draws.
pub fn run_sampled<P, R, G, E>(requested: usize, seed: u64, mut generate: G, eval: E) -> Result<Sampled<P, R>>
where
    P: Send + Sync,
    R: Send,
    G: FnMut(&mut ChaCha8Rng) -> P,
    E: Fn(&P) -> std::result::Result<R, EvalError> + Sync,
{
    let mut rng = rng(seed);
    let cap = REJECTION_FACTOR * requested.max(1);
    let mut accepted = Vec::with_capacity(requested);
    let mut drawn = 0usize;
    let mut rejected = 0usize;
    while accepted.len() < requested {
        let want = requested - accepted.len();
        if drawn + want > cap {
            return Err(Error::TooManyRejections {
                requested,
                rejected,
                cap,
            });
        }
        let batch: Vec<P> = (0..want).map(|_| generate(&mut rng)).collect();
        drawn += want;
        let results: Vec<std::result::Result<R, EvalError>> = batch.par_iter().map(&eval).collect();
        for (p, r) in batch.into_iter().zip(results) {
            match r {
                Ok(r) => accepted.push((p, r)),
                Err(e) if e.is_domain() => rejected += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(Sampled { accepted, rejected })
}

/// Scalars that can be built from a grid sample.
pub trait FromSample: Scalar {
    fn from_sample(x: f64) -> Self;
}

impl FromSample for f64 {
    fn from_sample(x: f64) -> Self {
        x
    }
}

impl FromSample for Rational {
    fn from_sample(x: f64) -> Self {
        grid_rational(x)
    }
}

/// Samples snapped points, evaluates a residual vector at each and folds
/// the results into a finished check.
pub fn sampled_check<S, G, E>(
    name: &str,
    backend: Backend,
    tolerance: f64,
    requested: usize,
    seed: u64,
    mut generate: G,
    eval: E,
) -> Result<Check>
where
    S: FromSample,
    G: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
    E: Fn(&[S]) -> std::result::Result<Vec<S>, EvalError> + Sync,
{
    let out = run_sampled(
        requested,
        seed,
        |r| {
            let mut p = generate(r);
            snap_all(&mut p);
            p
        },
        |p| {
            let s: Vec<S> = p.iter().map(|x| S::from_sample(*x)).collect();
            eval(&s)
        },
    )?;
    let mut b = Check::new(name, backend, tolerance).rejected(out.rejected);
    for (p, d) in &out.accepted {
        b.record(p, d);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let draw = |seed| {
            let mut r = rng(seed);
            uniform_ball(&mut r, 3, 0.5)
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut r = rng(1);
        for _ in 0..1000 {
            let v = uniform_ball(&mut r, 4, 0.25);
            assert!(v.iter().map(|x| x * x).sum::<f64>() <= 0.0625 + 1e-15);
        }
    }

    #[test]
    fn grid_points_are_exact() {
        let x = snap(0.123456);
        assert_eq!(crate::scalar::rational_to_f64(&grid_rational(x)), x);
    }

    #[test]
    fn rejections_are_resampled_and_capped() {
        let out = run_sampled(
            50,
            3,
            |r| r.gen_range(-1.0..1.0f64),
            |x| if *x < 0.0 { Err(EvalError::DivisionByZero) } else { Ok(*x) },
        )
        .unwrap();
        assert_eq!(out.accepted.len(), 50);
        assert!(out.rejected > 0);
        assert!(out.accepted.iter().all(|(_, r)| *r >= 0.0));

        let err = run_sampled(5, 3, |_| 0.0f64, |_| Err::<f64, _>(EvalError::DivisionByZero)).unwrap_err();
        assert!(matches!(err, Error::TooManyRejections { .. }));

        let err = run_sampled(5, 3, |_| 0.0f64, |_| Err::<f64, _>(EvalError::AlgebraMismatch)).unwrap_err();
        assert!(matches!(err, Error::Eval(EvalError::AlgebraMismatch)));
    }
}
