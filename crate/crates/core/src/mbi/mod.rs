//! Multi-compressor KLT with maximum block improvement.
//!
//! The estimation problem is reduced to `min ||H - sum_j F_j G_j||^2` over
//! blocks `F_j` of rank at most `r_j`. Each block problem has the closed-form
//! minimizer `[S_j R_{G_j}]_{r_j} G_j^+`, and the solver repeatedly commits
//! the single best block update.

mod bank;
mod block;
mod klt;
mod problem;
mod solver;

pub use bank::CompressorBank;
pub use block::{rank_constrained_lsq, uniqueness_check, Uniqueness};
pub use klt::{init_bank, klt_sensor, klt_single, proportional_signal_split};
pub use problem::{objective, reduce_problem, ReducedProblem};
pub use solver::{
    mbi_solve, mbi_solve_with, mbi_step, BlockCandidate, CandidateEvaluator, MbiConfig, MbiTrace,
    Sequential, StepOutcome,
};
