use thiserror::Error;

/// Failure while evaluating a map at a point.
///
/// Domain-type failures (`is_domain`) are what the samplers reject and
/// resample; the rest indicate a configuration problem and propagate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at scalar part {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("division by an element with zero scalar part")]
    DivisionByZero,
    #[error("{0} has no exact rational evaluation")]
    NotRational(&'static str),
    #[error("weil elements belong to different algebras")]
    AlgebraMismatch,
    #[error("point {0:?} lies outside the chart domain")]
    OutsideDomain(Vec<f64>),
    #[error("guard violated: {expr} = {value} is not below {bound}")]
    Guard {
        expr: String,
        value: f64,
        bound: f64,
    },
    #[error("flow left the vector field's domain at {0:?}")]
    FlowDomainExit(Vec<f64>),
    #[error("flow needs {needed} steps, budget is {budget}")]
    StepBudgetExceeded { needed: usize, budget: usize },
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
}

impl EvalError {
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            EvalError::Domain { .. }
                | EvalError::DivisionByZero
                | EvalError::OutsideDomain(_)
                | EvalError::Guard { .. }
                | EvalError::FlowDomainExit(_)
                | EvalError::StepBudgetExceeded { .. }
        )
    }
}

/// Position-annotated parse failure (expressions, polynomials, rationals).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at position {pos}: {msg}\n  {src}\n  {caret}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
    pub src: String,
    pub caret: String,
}

impl ParseError {
    pub fn new(src: &str, pos: usize, msg: impl Into<String>) -> Self {
        let caret = format!("{}^", " ".repeat(src[..pos.min(src.len())].chars().count()));
        ParseError {
            pos,
            msg: msg.into(),
            src: src.to_string(),
            caret,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid weil algebra: {0}")]
    InvalidAlgebra(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("{rejected} samples rejected while collecting {requested} (cap {cap})")]
    TooManyRejections {
        requested: usize,
        rejected: usize,
        cap: usize,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("backend {0} cannot evaluate this input")]
    Backend(String),
    #[error("no antipode: 1 + ab = 0")]
    NoAntipode,
    #[error("algebra is not regular of rank 1 at {0:?}")]
    NotRegularRank1(Vec<f64>),
    #[error("lift failed: {0}")]
    Lift(#[from] LiftError),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("not tame here: jacobian rank {rank} below leaf dimension {leaf_dim} at t = {t}")]
    NotTame { t: f64, rank: usize, leaf_dim: usize },
    #[error("step underflow at t = {t} (residual {residual:e})")]
    StepUnderflow { t: f64, residual: f64 },
    #[error("path does not start at the base point (distance {0:e})")]
    BadStart(f64),
    #[error("loop does not close (distance {0:e})")]
    LoopNotClosed(f64),
    #[error("path sample at t = {t} is {distance:e} away from the leaf")]
    OffLeaf { t: f64, distance: f64 },
    #[error("evaluation failed during lift: {0}")]
    Eval(EvalError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
