/// Runs `$body` with `$s` bound to the scalar type of `$backend`.
macro_rules! with_backend {
    ($backend:expr, $s:ident => $body:expr) => {
        match $backend {
            $crate::scalar::Backend::Rational => {
                type $s = $crate::scalar::Rational;
                $body
            }
            $crate::scalar::Backend::Float => {
                type $s = f64;
                $body
            }
        }
    };
}

pub mod affine_hopf;
pub mod algebras;
pub mod cli;
pub mod error;
pub mod flows;
pub mod foliation;
pub mod jets;
pub mod kahler;
pub mod linalg;
pub mod monad;
pub mod report;
pub mod sampling;
pub mod scalar;

pub use error::{Error, EvalError, ParseError, Result};
pub use scalar::{Backend, Rational, Scalar};
