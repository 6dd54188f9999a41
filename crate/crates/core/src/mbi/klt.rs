//! Single-sensor KLT and the decoupled warm start built from it.

use alloc::vec::Vec;

use super::bank::CompressorBank;
use crate::covariance::SecondMomentModel;
use crate::error::{invalid, Result};
use crate::linalg::{pinv, psd_sqrt, truncated, Matrix};

/// Rank-`r` KLT estimator `[E_xy (E_yy^+)^{1/2}]_r (E_yy^+)^{1/2}`.
pub fn klt_single(e_xy: &Matrix, e_yy: &Matrix, rank: usize) -> Result<Matrix> {
    if e_yy.nrows() != e_xy.ncols() {
        return Err(invalid("E_xy columns must match E_yy dimension"));
    }
    let root = psd_sqrt(&pinv(e_yy)?)?;
    Ok(truncated(&(e_xy * &root), rank)? * root)
}

/// KLT of the whole signal from sensor `j` alone, at the sensor's rank.
pub fn klt_sensor(model: &SecondMomentModel, j: usize) -> Result<Matrix> {
    klt_single(
        &model.e_xy_block(j),
        &model.e_yy_block(j, j),
        model.partition().rank(j),
    )
}

/// Splits `m` signal components over the sensors proportionally to `n_j`;
/// leftover components go to the lowest sensor indices.
pub fn proportional_signal_split(m: usize, obs_dims: &[usize]) -> Vec<usize> {
    let total: usize = obs_dims.iter().sum();
    let mut split: Vec<usize> = obs_dims.iter().map(|&n| m * n / total).collect();
    let assigned: usize = split.iter().sum();
    for slot in split.iter_mut().take(m - assigned) {
        *slot += 1;
    }
    split
}

/// Block-diagonal warm start: sensor `j` estimates its own slice `x_j` of the
/// signal with the KLT from `y_j` only, and the estimate is lifted to an
/// `m x n_j` block that is zero outside the rows of `x_j`.
///
/// `signal_split` gives `(m_1, ..., m_p)`; when it is absent or does not sum
/// to `m`, [`proportional_signal_split`] is used. Sensors with `m_j = 0` start
/// from a zero block.
pub fn init_bank(model: &SecondMomentModel, signal_split: Option<&[usize]>) -> Result<CompressorBank> {
    let part = model.partition();
    let m = part.signal_dim();
    let p = part.sensor_count();
    let split: Vec<usize> = match signal_split {
        Some(s) if s.len() == p && s.iter().sum::<usize>() == m => s.to_vec(),
        _ => proportional_signal_split(m, part.obs_dims()),
    };

    let mut blocks = Vec::with_capacity(p);
    let mut row = 0;
    for (j, &m_j) in split.iter().enumerate() {
        let mut block = Matrix::zeros(m, part.obs_dim(j));
        if m_j > 0 {
            let e_xjyj = model.e_xy_block(j).rows(row, m_j).into_owned();
            let local = klt_single(&e_xjyj, &model.e_yy_block(j, j), part.rank(j))?;
            block.rows_mut(row, m_j).copy_from(&local);
        }
        row += m_j;
        blocks.push(block);
    }
    Ok(CompressorBank::from_parts(part.clone(), blocks))
}
