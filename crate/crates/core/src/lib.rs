// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod compactness;
pub mod constitutive;
pub mod diagnostics;
pub mod fieldops;
pub mod solver;
