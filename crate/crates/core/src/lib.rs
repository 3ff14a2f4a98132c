// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod leading_order;
pub mod ode;
pub mod perturbation;
pub mod pipeline;
pub mod series;
pub mod validation;
