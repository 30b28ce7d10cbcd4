//! Expressions, charts and Weil-algebra jets.

pub mod chart;
pub mod expr;
pub mod weil;

pub use chart::{jacobian_of, ChartMap, DomainBox};
pub use expr::{Expr, Func};
pub use weil::{dual, first_order, second_order, taylor_lift, tensor_algebra, Primitive, WeilAlgebra, WeilElement};
