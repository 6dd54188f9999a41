use alloc::format;
use alloc::vec::Vec;

use super::bank::CompressorBank;
use super::block::BlockFactors;
use crate::covariance::{SecondMomentModel, SensorPartition};
use crate::error::{invalid, Result};
use crate::linalg::{frobenius_sq, pinv, psd_sqrt, Matrix, Projector};

/// The model reduced to `f(F) = ||H - sum_j F_j G_j||^2`, where
/// `H = E_xy (E_yy^{1/2})^+` and `G_j` are the row blocks of `E_yy^{1/2}`.
///
/// Up to the constant [`ReducedProblem::mse_offset`], `f` is the mean squared
/// reconstruction error of the bank.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    partition: SensorPartition,
    h: Matrix,
    g_blocks: Vec<Matrix>,
    right_projectors: Vec<Projector>,
    g_pinvs: Vec<Matrix>,
    pub(crate) factors: Vec<BlockFactors>,
    mse_offset: f64,
}

pub fn reduce_problem(model: &SecondMomentModel) -> Result<ReducedProblem> {
    let partition = model.partition().clone();
    let sqrt_yy = psd_sqrt(model.e_yy())?;
    let h = model.e_xy() * pinv(&sqrt_yy)?;
    let sqrt_xx = psd_sqrt(model.e_xx())?;

    let mut g_blocks = Vec::with_capacity(partition.sensor_count());
    let mut factors = Vec::with_capacity(partition.sensor_count());
    let mut right_projectors = Vec::with_capacity(partition.sensor_count());
    let mut g_pinvs = Vec::with_capacity(partition.sensor_count());
    for j in 0..partition.sensor_count() {
        let r = partition.obs_range(j);
        let g = sqrt_yy.rows(r.start, r.len()).into_owned();
        let f = BlockFactors::new(&g)?;
        right_projectors.push(f.right_projector());
        g_pinvs.push(f.pinv());
        factors.push(f);
        g_blocks.push(g);
    }

    let mse_offset = frobenius_sq(&sqrt_xx) - frobenius_sq(&h);
    Ok(ReducedProblem {
        partition,
        h,
        g_blocks,
        right_projectors,
        g_pinvs,
        factors,
        mse_offset,
    })
}

impl ReducedProblem {
    pub fn partition(&self) -> &SensorPartition {
        &self.partition
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn g_blocks(&self) -> &[Matrix] {
        &self.g_blocks
    }

    pub fn g_block(&self, j: usize) -> &Matrix {
        &self.g_blocks[j]
    }

    /// Cached `R_{G_j}`.
    pub fn right_projector(&self, j: usize) -> &Projector {
        &self.right_projectors[j]
    }

    /// Cached `G_j^+`.
    pub fn g_pinv(&self, j: usize) -> &Matrix {
        &self.g_pinvs[j]
    }

    /// `||E_xx^{1/2}||^2 - ||H||^2`; adding `f(F)` gives the analytic MSE.
    pub fn mse_offset(&self) -> f64 {
        self.mse_offset
    }

    /// `E_yy^{1/2}` reassembled from its row blocks.
    pub fn stacked_g(&self) -> Matrix {
        let n = self.partition.obs_total();
        let mut out = Matrix::zeros(n, n);
        for (j, g) in self.g_blocks.iter().enumerate() {
            let r = self.partition.obs_range(j);
            out.rows_mut(r.start, r.len()).copy_from(g);
        }
        out
    }

    pub(crate) fn check_bank(&self, bank: &CompressorBank) -> Result<()> {
        let bp = bank.partition();
        if bp.signal_dim() != self.partition.signal_dim() || bp.obs_dims() != self.partition.obs_dims() {
            return Err(invalid(format!(
                "bank shape (m = {}, n = {:?}) does not match problem (m = {}, n = {:?})",
                bp.signal_dim(),
                bp.obs_dims(),
                self.partition.signal_dim(),
                self.partition.obs_dims()
            )));
        }
        Ok(())
    }

    /// `H - sum_j F_j G_j`.
    pub fn residual(&self, bank: &CompressorBank) -> Result<Matrix> {
        self.check_bank(bank)?;
        let mut out = self.h.clone();
        for (f, g) in bank.blocks().iter().zip(&self.g_blocks) {
            out.gemm(-1.0, f, g, 1.0);
        }
        Ok(out)
    }

    /// `mse_offset + f(F)`.
    pub fn analytic_mse(&self, bank: &CompressorBank) -> Result<f64> {
        Ok(self.mse_offset + objective(self, bank)?)
    }
}

/// `f(F) = ||H - sum_j F_j G_j||^2`.
pub fn objective(rp: &ReducedProblem, bank: &CompressorBank) -> Result<f64> {
    Ok(frobenius_sq(&rp.residual(bank)?))
}
