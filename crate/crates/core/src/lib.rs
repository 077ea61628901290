//! Bernstein-function calculus: Sonine pairs, Riemann-Liouville and censored operators,
//! resolvent and Cauchy solvers, and Monte Carlo for the censored subordinator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod cli;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod laplace;
pub mod operators;
pub mod quadrature;
pub mod simulator;
pub mod solvers;
pub mod sonine;

pub use error::{Error, Result};
