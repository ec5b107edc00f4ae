// Validations use `!(x > 0.0)` so NaN fails them; the suggested
// rewrite `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod contour;
pub mod control;
pub mod error;
pub mod features;
pub mod harness;
pub mod image;
pub mod plant;
