// NaN must fail the validity checks, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod config;
pub mod expr;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod scheme;
pub mod spaces;
