//! Kendall random walks: exact distribution calculus through the Williamson
//! transform, path simulation, finite-dimensional laws, tail asymptotics
//! and limit theorems, plus a validation harness that cross-checks the
//! closed forms against Monte Carlo and numerical-integration oracles.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod fdd;
pub mod harness;
pub mod kernel;
pub mod quadrature;
pub mod simulator;
pub mod special;
pub mod williamson;

pub use distributions::{DistSpec, Family, GenericCdf, KendallIndex, StepDistribution};
pub use error::{KendallError, Result};
