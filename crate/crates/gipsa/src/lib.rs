//! First-order solvers for l1-regularized least squares built around a
//! doubly-inertial proximal gradient iteration, with parameter validation
//! against the conditions that guarantee convergence, local linear-rate
//! prediction from the active manifold, and a deterministic benchmark
//! harness.

// Guards written as `!(x <= tol)` are deliberate: unlike the inverted
// comparison, they fail when x is NaN, which is what every residual and
// curvature check here wants.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod oracle;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod schedules;
pub mod solver;

pub use error::{Error, Result};
pub use problem::{CompositeProblem, DenseMatrix, LassoInstance, Vector};
pub use schedules::{validate_gipsa, ScheduleParams, ScheduleSpec, ValidationReport};
pub use solver::{
    run, run_with_restart, IterationRecord, RunError, RunOutcome, SolverState, StopReason,
    StoppingRule, TraceSink,
};
