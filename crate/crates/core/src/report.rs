//! Verification results shared by every checker.

use serde::{Deserialize, Serialize};

use crate::scalar::{Backend, Rational, Scalar};

/// A point where a check attained its largest residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One verified identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub backend: Backend,
    pub samples: usize,
    pub rejected: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub verdict: String,
}

impl Check {
    pub fn new(name: impl Into<String>, backend: Backend, tolerance: f64) -> CheckBuilder {
        CheckBuilder {
            name: name.into(),
            backend,
            tolerance,
            samples: 0,
            rejected: 0,
            max: 0.0,
            all_exact_zero: true,
            witness: None,
        }
    }

    /// A check that is a single boolean fact rather than a residual.
    pub fn fact(name: impl Into<String>, backend: Backend, holds: bool, detail: impl Into<String>) -> Check {
        let name = name.into();
        let detail = detail.into();
        Check {
            verdict: if holds {
                format!("holds: {detail}")
            } else {
                format!("fails: {detail}")
            },
            name,
            backend,
            samples: 1,
            rejected: 0,
            max_residual: if holds { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: holds,
            witness: None,
        }
    }
}

/// Running maximum of residuals with the worst point.
#[derive(Debug, Clone)]
pub struct CheckBuilder {
    name: String,
    backend: Backend,
    tolerance: f64,
    samples: usize,
    rejected: usize,
    max: f64,
    all_exact_zero: bool,
    witness: Option<Witness>,
}

impl CheckBuilder {
    pub fn rejected(mut self, n: usize) -> Self {
        self.rejected += n;
        self
    }

    /// Records the residual vector `lhs - rhs` at `point`.
    pub fn record<S: Scalar>(&mut self, point: &[f64], diff: &[S]) {
        let exact_zero = diff.iter().all(Scalar::is_exact_zero);
        let r = diff
            .iter()
            .map(|d| d.real_part().abs())
            .fold(0.0f64, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) });
        self.record_value(point, r, exact_zero);
    }

    pub fn record_norm(&mut self, point: &[f64], residual: f64) {
        self.record_value(point, residual, residual == 0.0);
    }

    pub fn record_exact(&mut self, point: &[f64], residual: &Rational) {
        use num_traits::{Signed, Zero};
        let r = crate::scalar::rational_to_f64(&residual.abs());
        self.record_value(point, r, residual.is_zero());
    }

    fn record_value(&mut self, point: &[f64], r: f64, exact_zero: bool) {
        self.samples += 1;
        self.all_exact_zero &= exact_zero;
        let worse = r > self.max || r.is_nan() || (!exact_zero && self.witness.is_none());
        if worse {
            self.max = if r.is_nan() { f64::NAN } else { r.max(self.max) };
            self.witness = Some(Witness {
                point: point.to_vec(),
                residual: r,
                note: None,
            });
        }
    }

    pub fn merge(mut self, other: CheckBuilder) -> Self {
        self.samples += other.samples;
        self.rejected += other.rejected;
        self.all_exact_zero &= other.all_exact_zero;
        if other.max > self.max || other.max.is_nan() {
            self.max = other.max;
            self.witness = other.witness;
        }
        self
    }

    pub fn finish(self) -> Check {
        let passed = match self.backend {
            Backend::Rational => self.all_exact_zero,
            Backend::Float => !self.max.is_nan() && self.max <= self.tolerance,
        };
        let verdict = if passed {
            let how = match self.backend {
                Backend::Rational => "exactly".to_string(),
                Backend::Float => format!("within {:e}", self.tolerance),
            };
            format!("consistent with {} on {} samples ({how})", self.name, self.samples)
        } else {
            format!("violated: max residual {:e} exceeds tolerance {:e}", self.max, self.tolerance)
        };
        Check {
            name: self.name,
            backend: self.backend,
            samples: self.samples,
            rejected: self.rejected,
            max_residual: self.max,
            tolerance: self.tolerance,
            passed,
            witness: if passed && self.max == 0.0 { None } else { self.witness },
            verdict,
        }
    }
}

/// A named collection of checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subject: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl Report {
    pub fn new(subject: impl Into<String>, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Report {
            subject: subject.into(),
            passed,
            checks,
            details: serde_json::Value::Null,
        }
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }
}
