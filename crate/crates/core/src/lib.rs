#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod solvers;
