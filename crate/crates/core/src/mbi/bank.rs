use alloc::format;
use alloc::vec::Vec;

use crate::covariance::SensorPartition;
use crate::error::{invalid, Result};
use crate::linalg::{ensure_finite, Matrix, Svd};

/// The tuple `(F_1, ..., F_p)` of per-sensor `m x n_j` blocks, each of rank at
/// most `r_j`. Applied to stacked observations it computes `sum_j F_j y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressorBank {
    blocks: Vec<Matrix>,
    partition: SensorPartition,
}

impl CompressorBank {
    /// Checks block shapes and the rank bound of every block.
    pub fn new(partition: SensorPartition, blocks: Vec<Matrix>) -> Result<Self> {
        if blocks.len() != partition.sensor_count() {
            return Err(invalid(format!(
                "{} blocks for {} sensors",
                blocks.len(),
                partition.sensor_count()
            )));
        }
        let m = partition.signal_dim();
        for (j, f) in blocks.iter().enumerate() {
            let expected = (m, partition.obs_dim(j));
            if f.shape() != expected {
                return Err(invalid(format!(
                    "block {j} must be {}x{}, got {:?}",
                    expected.0,
                    expected.1,
                    f.shape()
                )));
            }
            ensure_finite(f, "compressor block")?;
            let rank = Svd::new(f)?.numeric_rank;
            if rank > partition.rank(j) {
                return Err(invalid(format!(
                    "block {j} has numeric rank {rank} > r_j = {}",
                    partition.rank(j)
                )));
            }
        }
        Ok(Self { blocks, partition })
    }

    pub(crate) fn from_parts(partition: SensorPartition, blocks: Vec<Matrix>) -> Self {
        debug_assert_eq!(blocks.len(), partition.sensor_count());
        Self { blocks, partition }
    }

    pub fn zeros(partition: &SensorPartition) -> Self {
        let m = partition.signal_dim();
        let blocks = partition.obs_dims().iter().map(|&n| Matrix::zeros(m, n)).collect();
        Self {
            blocks,
            partition: partition.clone(),
        }
    }

    pub fn partition(&self) -> &SensorPartition {
        &self.partition
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &Matrix {
        &self.blocks[j]
    }

    pub fn into_blocks(self) -> Vec<Matrix> {
        self.blocks
    }

    /// Replaces block `j`, re-checking its shape and rank.
    pub fn with_block(&self, j: usize, block: Matrix) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        blocks[j] = block;
        Self::new(self.partition.clone(), blocks)
    }

    /// `F = [F_1, ..., F_p]`, `m x n`.
    pub fn to_matrix(&self) -> Matrix {
        let mut out = Matrix::zeros(self.partition.signal_dim(), self.partition.obs_total());
        for (j, f) in self.blocks.iter().enumerate() {
            let r = self.partition.obs_range(j);
            out.columns_mut(r.start, r.len()).copy_from(f);
        }
        out
    }

    /// `F Y` for stacked observations `Y` (one column per sample).
    pub fn apply(&self, y: &Matrix) -> Result<Matrix> {
        if y.nrows() != self.partition.obs_total() {
            return Err(invalid(format!(
                "observations have {} rows, partition expects {}",
                y.nrows(),
                self.partition.obs_total()
            )));
        }
        Ok(self.to_matrix() * y)
    }

    pub fn numeric_ranks(&self) -> Result<Vec<usize>> {
        self.blocks.iter().map(|f| Ok(Svd::new(f)?.numeric_rank)).collect()
    }
}
