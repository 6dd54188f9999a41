//! Compression and recovery of a random signal observed by distributed
//! sensors.
//!
//! Each sensor `j` compresses its observation `y_j` to `r_j < n_j`
//! coordinates with an encoder `Q_j`; a fusion center reconstructs
//! `x_hat = sum_j P_j Q_j y_j`. The blocks `F_j = P_j Q_j` are found by
//! maximum block improvement over closed-form rank-constrained least-squares
//! updates, starting from per-sensor KLT estimators.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod covariance;
pub mod error;
pub mod linalg;
pub mod mbi;
pub mod wsn;

pub use nalgebra;

pub use covariance::{
    estimate_moments, example1_model, joint_model_from_factor, Provenance, SampleEnsemble,
    SecondMomentModel, SensorPartition,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use mbi::{
    init_bank, klt_single, mbi_solve, mbi_step, objective, rank_constrained_lsq, reduce_problem,
    CompressorBank, MbiConfig, MbiTrace, ReducedProblem,
};
pub use wsn::{analytic_mse, compress, empirical_mse, factorize_wsn, reconstruct, FactorizedWsn};
