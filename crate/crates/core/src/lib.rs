//! Bound-preserving stabilized finite elements for the Keller–Segel–Navier–Stokes
//! system on 2D triangulations.

// `!(x > 0.0)` style tests deliberately treat NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fespace;
pub mod inequalities;
pub mod mesh;
pub mod operators;
pub mod output;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod stabilization;

pub use error::{Error, Result};
