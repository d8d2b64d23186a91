//! Finite-element solver for quasilinear Robin problems on an interval with
//! a gradient-dependent convection term and a singular reaction, built on
//! truncation at a positive subsolution and a frozen-gradient fixed point.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod discretization;
pub mod error;
pub mod fixed_point;
pub mod frozen;
pub mod operator;
pub mod reaction;
pub mod verifier;

pub use error::{Error, Result};
