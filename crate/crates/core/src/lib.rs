#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate openblas_src;

pub mod adiabatic;
pub mod cli;
pub mod error;
pub mod format;
pub mod linalg;
pub mod lyapunov;
pub mod optimizer;
pub mod propagation;
pub mod robustness;
pub mod spin;
pub mod symmetry;

pub use error::{Error, Result};
