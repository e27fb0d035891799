// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod qdynamics;
pub mod robustness;
pub mod states;
pub mod topology;

pub use error::{Error, Result};
