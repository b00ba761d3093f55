//! Sparse signal recovery from quadratic measurements.
//!
//! Implements penalized least squares for the model `y_i = b' Z_i b + noise`
//! with symmetric measurement matrices `Z_i`, minimizing
//!
//! ```text
//! F(b) = (1/4n) sum_i (b' Z_i b - y_i)^2  +  sum_j p(|b_j|)
//! ```
//!
//! where `p` is a (possibly nonconvex) sparsity penalty that is weakly convex:
//! `p + (mu/2) t^2` is convex for some modulus `mu >= 0`. Two first-order
//! solvers are provided — proximal gradient ([`solver::solve_pga`]) and
//! iteratively reweighted l1 ([`solver::solve_irl1`]) — together with a sparse
//! spectral initializer, a data-driven lambda rule with cross-validated scale,
//! and a Monte Carlo harness for recovery experiments over synthetic ensembles.

// Validation guards are written `!(x > 0.0)` on purpose: the positive form
// rejects NaN, the clippy-suggested `x <= 0.0` silently accepts it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use ndarray;

pub mod experiment;
pub mod init;
pub mod io;
pub mod linalg;
pub mod model;
pub mod penalty;
pub mod solver;
pub mod tuning;

pub use experiment::{run_experiment, summarize, ExperimentConfig};
pub use init::{spectral_init, InitConfig};
pub use model::{MeasurementSet, Storage};
pub use penalty::{PenaltyFamily, PenaltySpec};
pub use solver::{
    fixed_point_residual, local_min_check, oracle_solve, solve_irl1, solve_pga, SolverConfig,
    SolverResult, Termination,
};
pub use tuning::{lambda_rule, relative_error, tune_lambda, TuningConfig};
