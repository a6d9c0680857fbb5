//! Proximal bundle methods with Nesterov-style acceleration for smooth convex
//! minimization.
//!
//! The crate provides quadratic test objectives, a two-cut bundle model with a
//! closed-form proximal step, the inner `prox_descent` loop, the outer
//! solvers (gradient descent, accelerated gradient, the proximal bundle
//! method in double- and single-loop form, and its accelerated variant), and
//! checkers that verify the certificates of a finished run.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle_model;
pub mod diagnostics;
pub mod error;
pub mod objectives;
pub mod prox_descent;
pub mod rng;
pub mod solvers;
pub mod vecops;

pub use error::{Error, Result};
pub use objectives::{ObjectiveOracle, ObjectiveSpec, QuadraticObjective};
pub use solvers::{run_solver, RunContext, RunRecord, SolverConfig, SolverKind};
