use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::expr::{is_valid_name, Expr};
use super::weil::first_order;
use crate::error::{Error, EvalError, Result};
use crate::scalar::{Rational, Scalar};

/// Axis-aligned box `[min_i, max_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl DomainBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        let b = DomainBox { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        DomainBox {
            min: vec![lo; dim],
            max: vec![hi; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.max.len() {
            return Err(Error::InvalidChart(format!(
                "domain bounds have lengths {} and {}",
                self.min.len(),
                self.max.len()
            )));
        }
        for (i, (lo, hi)) in self.min.iter().zip(&self.max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidChart(format!("domain side {i} is [{lo}, {hi}], need finite lo < hi")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.min.iter().zip(&self.max)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.min.iter().zip(&self.max).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Smallest half side length.
    pub fn half_width(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| 0.5 * (b - a)).fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn product(&self, other: &DomainBox) -> DomainBox {
        DomainBox {
            min: self.min.iter().chain(&other.min).copied().collect(),
            max: self.max.iter().chain(&other.max).copied().collect(),
        }
    }
}

/// A map `ℝᵐ ⊇ box → ℝᵏ` given by `k` expressions in `m` named inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartMap {
    inputs: Vec<String>,
    exprs: Vec<Expr>,
    domain: DomainBox,
}

impl ChartMap {
    pub fn new(inputs: Vec<String>, exprs: Vec<Expr>, domain: DomainBox) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidChart("a chart map needs at least one input".into()));
        }
        for name in &inputs {
            if !is_valid_name(name) {
                return Err(Error::InvalidChart(format!("invalid variable name `{name}`")));
            }
        }
        domain.validate()?;
        if domain.dim() != inputs.len() {
            return Err(Error::InvalidChart(format!(
                "{} inputs but a {}-dimensional domain",
                inputs.len(),
                domain.dim()
            )));
        }
        for (i, e) in exprs.iter().enumerate() {
            if let Some(v) = e.max_var() {
                if v >= inputs.len() {
                    return Err(Error::InvalidChart(format!("output {i} references undeclared input #{v}")));
                }
            }
        }
        Ok(ChartMap { inputs, exprs, domain })
    }

    /// Parses each output expression against the declared inputs.
    pub fn parse(inputs: &[&str], exprs: &[&str], domain: DomainBox) -> Result<Self> {
        let names: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
        let parsed = exprs
            .iter()
            .map(|src| Expr::parse(src, &names))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(names, parsed, domain)
    }

    /// Input names `x1..xn`.
    pub fn indexed_names(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_dim(&self) -> usize {
        self.exprs.len()
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        domain.validate()?;
        if domain.dim() != self.inputs.len() {
            return Err(Error::InvalidChart("domain dimension does not match the inputs".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn is_rational(&self) -> bool {
        self.exprs.iter().all(Expr::is_rational)
    }

    pub fn expr_strings(&self) -> Vec<String> {
        self.exprs.iter().map(|e| e.display(&self.inputs).to_string()).collect()
    }

    /// Evaluates after checking that the scalar parts lie in the domain box.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>, EvalError> {
        let real: Vec<f64> = x.iter().map(Scalar::real_part).collect();
        if !self.domain.contains(&real) {
            return Err(EvalError::OutsideDomain(real));
        }
        self.eval_unchecked(x)
    }

    pub fn eval_unchecked<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>, EvalError> {
        if x.len() != self.inputs.len() {
            return Err(EvalError::Arity {
                expected: self.inputs.len(),
                got: x.len(),
            });
        }
        self.exprs.iter().map(|e| e.eval(x)).collect()
    }

    /// `(f(x), f'(x))` at a float point through one first-order jet evaluation.
    pub fn jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), EvalError> {
        jacobian_of(|v| self.eval_unchecked(v), x, self.output_dim())
    }

    /// Exact Jacobian for rational maps.
    pub fn jacobian_exact(&self, x: &[Rational]) -> Result<(Vec<Rational>, Vec<Vec<Rational>>), EvalError> {
        let m = x.len();
        let alg = first_order(m);
        let pts: Vec<_> = x
            .iter()
            .enumerate()
            .map(|(i, xi)| alg.point(xi.clone(), &[(i + 1, xi.one_like())]))
            .collect();
        let out = self.eval_unchecked(&pts)?;
        let values = out.iter().map(|o| o.scalar_part().clone()).collect();
        let jac = out.iter().map(|o| (1..=m).map(|j| o.coeff(j).clone()).collect()).collect();
        Ok((values, jac))
    }

    /// `g ∘ self`, by substitution.
    pub fn then(&self, g: &ChartMap) -> Result<ChartMap> {
        if g.input_dim() != self.output_dim() {
            return Err(Error::Shape(format!(
                "cannot compose: {} outputs into {} inputs",
                self.output_dim(),
                g.input_dim()
            )));
        }
        let exprs = g.exprs.iter().map(|e| e.substitute(&self.exprs)).collect();
        ChartMap::new(self.inputs.clone(), exprs, self.domain.clone())
    }
}

/// Value and Jacobian of `f` at `x` via first-order jets in `x.len()` directions.
pub fn jacobian_of<F>(f: F, x: &[f64], outputs: usize) -> Result<(Vec<f64>, DMatrix<f64>), EvalError>
where
    F: FnOnce(&[super::WeilElement<f64>]) -> Result<Vec<super::WeilElement<f64>>, EvalError>,
{
    let m = x.len();
    let alg = first_order(m);
    let pts: Vec<_> = x.iter().enumerate().map(|(i, xi)| alg.point(*xi, &[(i + 1, 1.0)])).collect();
    let out = f(&pts)?;
    if out.len() != outputs {
        return Err(EvalError::Arity {
            expected: outputs,
            got: out.len(),
        });
    }
    let values = out.iter().map(|o| *o.scalar_part()).collect();
    let jac = DMatrix::from_fn(outputs, m, |i, j| *out[i].coeff(j + 1));
    Ok((values, jac))
}
