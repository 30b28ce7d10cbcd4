//! Leaves `L_x = h_x(T_xM)`, path lifting into the fiber, and linear holonomy.

use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebras::{distribution_at, rank_at, AlgebraMap, SampleConfig};
use crate::error::{Error, EvalError, LiftError, Result};
use crate::jets::{jacobian_of, ChartMap, DomainBox};
use crate::linalg::{eigenvalues, numerical_rank, orthogonal_complement, pseudo_inverse};
use crate::monad::sub;
use crate::report::{Check, Report};
use crate::sampling::{self, run_sampled};
use crate::scalar::{Backend, Scalar};

pub const PARTITION_TOL: f64 = 1e-6;
pub const PARTITION_SUCCESS: f64 = 0.99;

/// Points `h(x, vᵢ)` for `vᵢ` uniform in a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafCloud {
    pub base: Vec<f64>,
    pub params: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
    /// Rank of `h_x′(vᵢ)` at each sample.
    pub point_ranks: Vec<usize>,
    /// Largest sampled rank; equals `rank_at(h, x)` on tame samples.
    pub dimension: usize,
    pub rank_at_base: usize,
    pub rejected: usize,
}

pub fn sample_leaf(h: &AlgebraMap, x: &[f64], count: usize, radius: f64, seed: u64) -> Result<LeafCloud> {
    let n = h.dim();
    let out = run_sampled(
        count,
        seed,
        |r| sampling::uniform_ball(r, n, radius),
        |v| {
            let (y, jac) = h.fiber_jacobian(x, v)?;
            let j = DMatrix::from_fn(n, n, |a, b| jac[a][b]);
            Ok((wrap_point(h, y), numerical_rank(&j)))
        },
    )?;
    let rank_at_base = rank_at(h, x)?;
    let point_ranks: Vec<usize> = out.accepted.iter().map(|(_, (_, r))| *r).collect();
    Ok(LeafCloud {
        base: x.to_vec(),
        dimension: point_ranks.iter().copied().max().unwrap_or(rank_at_base),
        params: out.accepted.iter().map(|(v, _)| v.clone()).collect(),
        points: out.accepted.into_iter().map(|(_, (y, _))| y).collect(),
        point_ranks,
        rank_at_base,
        rejected: out.rejected,
    })
}

/// Periodic coordinates reduced to `[0, P)`.
fn wrap_point(h: &AlgebraMap, mut y: Vec<f64>) -> Vec<f64> {
    for (yi, p) in y.iter_mut().zip(h.periodic()) {
        if let Some(p) = p {
            *yi = yi.rem_euclid(*p);
        }
    }
    y
}

impl LeafCloud {
    /// One row per point: parameters, then coordinates.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.base.len();
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=n).map(|i| format!("v{i}")).chain((1..=n).map(|i| format!("y{i}"))).collect();
        out.write_record(&header).map_err(csv_error)?;
        for (v, y) in self.params.iter().zip(&self.points) {
            out.write_record(v.iter().chain(y).map(|c| format!("{c:?}"))).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Scatter plot of a two-dimensional cloud with the base point marked.
    pub fn to_svg(&self) -> Result<String> {
        if self.base.len() != 2 {
            return Err(Error::Precondition("svg export needs a two-dimensional chart".into()));
        }
        let all = self.points.iter().chain(std::iter::once(&self.base));
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in all {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (0..2).map(|k| (hi[k] - lo[k]).max(1e-9)).fold(0.0, f64::max);
        let size = 400.0;
        let pad = 20.0;
        let map = |p: &[f64]| {
            let sx = pad + (p[0] - lo[0]) / span * (size - 2.0 * pad);
            let sy = size - pad - (p[1] - lo[1]) / span * (size - 2.0 * pad);
            (sx, sy)
        };
        let mut svg = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
        svg.push('\n');
        svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        svg.push('\n');
        for p in &self.points {
            let (sx, sy) = map(p);
            svg.push_str(&format!(r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="1.5" fill="steelblue"/>"#));
            svg.push('\n');
        }
        let (bx, by) = map(&self.base);
        svg.push_str(&format!(r#"<circle cx="{bx:.2}" cy="{by:.2}" r="4" fill="crimson"/>"#));
        svg.push_str("\n</svg>\n");
        Ok(svg)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftOptions {
    /// Initial number of continuation steps on `[0, 1]`.
    pub steps: usize,
    /// Gauss-Newton stops once the residual is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest continuation step before giving up.
    pub min_step: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            steps: 64,
            tol: 1e-10,
            max_iter: 50,
            min_step: 1e-6,
        }
    }
}

/// `γ̃(tⱼ)` with `h(x, γ̃(tⱼ)) ≈ γ(tⱼ)` and the residual at each accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPath {
    pub base: Vec<f64>,
    pub times: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
    pub params: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub halvings: usize,
}

impl LiftedPath {
    pub fn endpoint(&self) -> &[f64] {
        self.params.last().map_or(&[], Vec::as_slice)
    }

    pub fn endpoint_error(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

enum SolveFailure {
    NotTame(usize),
    Stalled(f64),
    Eval(EvalError),
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn residual(h: &AlgebraMap, x: &[f64], u: &[f64], target: &[f64]) -> Result<Vec<f64>, EvalError> {
    Ok(h.wrap(sub(target, &h.apply(x, u)?)))
}

/// Damped Gauss-Newton for `h(x, u) = target` starting at `u0`.
fn solve(h: &AlgebraMap, x: &[f64], u0: &[f64], target: &[f64], leaf_dim: usize, opts: &LiftOptions) -> Result<(Vec<f64>, f64), SolveFailure> {
    let n = h.dim();
    let mut u = u0.to_vec();
    let mut r = residual(h, x, &u, target).map_err(SolveFailure::Eval)?;
    let mut nr = norm(&r);
    for _ in 0..opts.max_iter {
        if nr <= opts.tol {
            return Ok((u, nr));
        }
        let (_, jac) = h.fiber_jacobian(x, &u).map_err(SolveFailure::Eval)?;
        let j = DMatrix::from_fn(n, n, |a, b| jac[a][b]);
        let rank = numerical_rank(&j);
        if rank < leaf_dim {
            return Err(SolveFailure::NotTame(rank));
        }
        let delta = pseudo_inverse(&j) * DVector::from_column_slice(&r);
        if delta.norm() <= 1e-15 * (1.0 + norm(&u)) {
            return Err(SolveFailure::Stalled(nr));
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        let mut last_error = None;
        for _ in 0..30 {
            let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
            match residual(h, x, &trial, target) {
                Ok(rt) => {
                    let nt = norm(&rt);
                    if nt < nr {
                        u = trial;
                        r = rt;
                        nr = nt;
                        accepted = true;
                        break;
                    }
                }
                Err(e) => last_error = Some(e),
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(match last_error {
                Some(e) => SolveFailure::Eval(e),
                None => SolveFailure::Stalled(nr),
            });
        }
    }
    if nr <= opts.tol {
        Ok((u, nr))
    } else {
        Err(SolveFailure::Stalled(nr))
    }
}

/// Lifts `γ: [0, 1] → L_x` with `γ(0) = x` to `γ̃` in `T_xM` by continuation.
pub fn lift_path<P>(h: &AlgebraMap, x: &[f64], gamma: P, opts: &LiftOptions) -> Result<LiftedPath>
where
    P: Fn(f64) -> Result<Vec<f64>, EvalError>,
{
    let n = h.dim();
    let start = gamma(0.0)?;
    let gap = norm(&h.wrap(sub(&start, x)));
    if gap > opts.tol.max(1e-9) {
        return Err(LiftError::BadStart(gap).into());
    }
    let leaf_dim = rank_at(h, x)?;
    let base_dt = 1.0 / opts.steps.max(1) as f64;
    let mut path = LiftedPath {
        base: x.to_vec(),
        times: vec![0.0],
        targets: vec![start],
        params: vec![vec![0.0; n]],
        residuals: vec![gap],
        halvings: 0,
    };
    let mut t = 0.0;
    let mut dt = base_dt;
    let mut u = vec![0.0; n];
    while t < 1.0 {
        let next = (t + dt).min(1.0);
        let target = gamma(next)?;
        match solve(h, x, &u, &target, leaf_dim, opts) {
            Ok((un, res)) => {
                u = un;
                t = next;
                path.times.push(t);
                path.targets.push(target);
                path.params.push(u.clone());
                path.residuals.push(res);
                dt = (2.0 * dt).min(base_dt);
            }
            Err(SolveFailure::NotTame(rank)) => {
                return Err(LiftError::NotTame { t: next, rank, leaf_dim }.into());
            }
            Err(failure) => {
                dt *= 0.5;
                path.halvings += 1;
                if dt < opts.min_step {
                    return Err(match failure {
                        SolveFailure::Stalled(distance) if distance > opts.tol => LiftError::OffLeaf { t: next, distance },
                        SolveFailure::Eval(e) => LiftError::Eval(e),
                        _ => LiftError::StepUnderflow { t, residual: f64::NAN },
                    }
                    .into());
                }
            }
        }
    }
    Ok(path)
}

/// A path given by expressions in `t` on `[0, 1]`.
pub fn path_from_exprs(exprs: &[&str]) -> Result<ChartMap> {
    ChartMap::parse(&["t"], exprs, DomainBox::cube(1, 0.0, 1.0))
}

pub fn path_fn(path: &ChartMap) -> impl Fn(f64) -> Result<Vec<f64>, EvalError> + '_ {
    move |t| path.eval_unchecked(&[t])
}

/// One transitivity witness: `z = h(h(x, v), w) = h(x, u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionWitness {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Option<Vec<f64>>,
    pub endpoint_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// For random `v, w`, lifts `s ↦ h(x, 2sv)` then `s ↦ h(h(x,v), (2s−1)w)` and
/// reports how often `h(x, u) = h(h(x,v), w)` is reached within tolerance.
pub fn check_partition(h: &AlgebraMap, x: &[f64], trials: usize, cfg: &SampleConfig, opts: &LiftOptions) -> Result<Report> {
    let n = h.dim();
    let radius = cfg.radius_fraction * h.domain().half_width();
    let out = run_sampled(
        trials,
        cfg.seed,
        |r| {
            let mut p = sampling::uniform_ball(r, n, radius);
            p.extend(sampling::uniform_ball(r, n, radius));
            p
        },
        |p| {
            let (v, w) = (&p[..n], &p[n..]);
            let y = h.apply(x, v)?;
            let z = h.apply(&y, w)?;
            Ok((y, z))
        },
    )?;
    let witnesses: Vec<PartitionWitness> = out
        .accepted
        .par_iter()
        .map(|(p, (y, z))| {
            let (v, w) = (&p[..n], &p[n..]);
            let gamma = |s: f64| -> Result<Vec<f64>, EvalError> {
                if s <= 0.5 {
                    let sv: Vec<f64> = v.iter().map(|c| 2.0 * s * c).collect();
                    h.apply(x, &sv)
                } else {
                    let sw: Vec<f64> = w.iter().map(|c| (2.0 * s - 1.0) * c).collect();
                    h.apply(y, &sw)
                }
            };
            match lift_path(h, x, gamma, opts) {
                Ok(path) => {
                    let u = path.endpoint().to_vec();
                    let err = h
                        .apply(x, &u)
                        .map(|hz| norm(&h.wrap(sub(&hz, z))))
                        .unwrap_or(f64::INFINITY);
                    PartitionWitness {
                        v: v.to_vec(),
                        w: w.to_vec(),
                        z: z.clone(),
                        u: Some(u),
                        endpoint_error: err,
                        failure: None,
                    }
                }
                Err(e) => PartitionWitness {
                    v: v.to_vec(),
                    w: w.to_vec(),
                    z: z.clone(),
                    u: None,
                    endpoint_error: f64::INFINITY,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok: Vec<&PartitionWitness> = witnesses.iter().filter(|w| w.endpoint_error <= PARTITION_TOL).collect();
    let rate = ok.len() as f64 / witnesses.len().max(1) as f64;
    let worst = ok.iter().map(|w| w.endpoint_error).fold(0.0, f64::max);
    let mut check = Check::fact(
        "transitivity",
        Backend::Float,
        rate >= PARTITION_SUCCESS,
        format!(
            "{} of {} witnesses reach h(h(x,v),w) within {PARTITION_TOL:e}; worst accepted endpoint error {worst:e}",
            ok.len(),
            witnesses.len()
        ),
    );
    check.samples = witnesses.len();
    check.rejected = out.rejected;
    check.max_residual = worst;
    check.tolerance = PARTITION_TOL;
    let report = Report::new(format!("partition of {}", h.name()), vec![check]);
    Ok(report.with_details(json!({
        "base": x,
        "success_rate": rate,
        "witnesses": witnesses.iter().take(5).collect::<Vec<_>>(),
    })))
}

/// The linear return map on the transversal `D_x^⊥` obtained by sliding along
/// a leaf loop, `y ↦ h(y, v₀)` with `h(x, v₀) = x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holonomy {
    pub base: Vec<f64>,
    pub loop_param: Vec<f64>,
    pub transversal: Vec<Vec<f64>>,
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<(f64, f64)>,
}

impl Holonomy {
    pub fn matrix(&self) -> DMatrix<f64> {
        let k = self.matrix.len();
        DMatrix::from_fn(k, k, |i, j| self.matrix[i][j])
    }
}

pub fn holonomy_linear_map<P>(h: &AlgebraMap, x: &[f64], lp: P, opts: &LiftOptions) -> Result<Holonomy>
where
    P: Fn(f64) -> Result<Vec<f64>, EvalError>,
{
    let n = h.dim();
    let end = lp(1.0)?;
    let gap = norm(&h.wrap(sub(&end, x)));
    if gap > 1e-9 {
        return Err(LiftError::LoopNotClosed(gap).into());
    }
    let lifted = lift_path(h, x, lp, opts)?;
    let v0 = lifted.endpoint().to_vec();
    let (_, jac) = jacobian_of(
        |y| {
            let vs: Vec<_> = v0.iter().map(|c| y[0].constant_f64(*c)).collect();
            h.apply(y, &vs)
        },
        x,
        n,
    )?;
    let t = orthogonal_complement(&distribution_at(h, x)?, n);
    let m = t.transpose() * jac * &t;
    let eig: Vec<Complex<f64>> = eigenvalues(&m);
    Ok(Holonomy {
        base: x.to_vec(),
        loop_param: v0,
        transversal: (0..t.ncols()).map(|j| t.column(j).iter().copied().collect()).collect(),
        matrix: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        eigenvalues: eig.iter().map(|c| (c.re, c.im)).collect(),
    })
}

/// True when some eigenvalue lies within `tol` of 1.
pub fn check_eigenvalue_one(m: &DMatrix<f64>, tol: f64) -> bool {
    eigenvalues(m).iter().any(|l| (l - Complex::new(1.0, 0.0)).norm() <= tol)
}
