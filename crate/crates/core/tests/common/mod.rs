#![allow(dead_code)]

use klt_mbi_core::nalgebra::SymmetricEigen;
use klt_mbi_core::{joint_model_from_factor, Matrix, SecondMomentModel, SensorPartition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Product of random `rows x rank` and `rank x cols` factors.
pub fn low_rank(rng: &mut impl Rng, rows: usize, cols: usize, rank: usize) -> Matrix {
    gaussian(rng, rows, rank) * gaussian(rng, rank, cols)
}

/// Singular values from the eigenvalues of the Gram matrix, descending,
/// padded to `min(rows, cols)`.
pub fn gram_singular_values(c: &Matrix) -> Vec<f64> {
    let k = c.nrows().min(c.ncols());
    let gram = if c.nrows() <= c.ncols() {
        c * c.transpose()
    } else {
        c.transpose() * c
    };
    let eig = SymmetricEigen::new(gram);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s.truncate(k);
    s
}

pub fn frob_sq(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub fn random_partition(rng: &mut impl Rng, sensors: usize, max_dim: usize) -> SensorPartition {
    let m = rng.random_range(1..=max_dim);
    let obs: Vec<usize> = (0..sensors).map(|_| rng.random_range(1..=max_dim)).collect();
    let ranks: Vec<usize> = obs.iter().map(|&n| rng.random_range(1..=n)).collect();
    SensorPartition::new(m, obs, ranks).unwrap()
}

/// Exact model from a random factor with `cols` columns.
pub fn random_model(rng: &mut impl Rng, part: &SensorPartition, cols: usize) -> SecondMomentModel {
    let a = gaussian(rng, part.signal_dim() + part.obs_total(), cols);
    joint_model_from_factor(&a, part).unwrap()
}

/// `tr(E_xx - E_xy F^T - F E_yx + F E_yy F^T)`.
pub fn trace_mse(model: &SecondMomentModel, f: &Matrix) -> f64 {
    let fxy = f * model.e_xy().transpose();
    (model.e_xx() - &fxy - fxy.transpose() + f * model.e_yy() * f.transpose()).trace()
}
