//! Deployable sensor encoders and fusion-center decoder, plus error
//! evaluation.

use alloc::format;
use alloc::vec::Vec;

use crate::covariance::{SampleEnsemble, SecondMomentModel, SensorPartition};
use crate::error::{invalid, Result};
use crate::linalg::{frobenius_sq, Matrix, Svd};
use crate::mbi::{reduce_problem, CompressorBank};

/// Encoders `Q_j` (`r_j x n_j`) and decoder blocks `P_j` (`m x r_j`) with
/// `P_j Q_j = F_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedWsn {
    encoders: Vec<Matrix>,
    decoder_blocks: Vec<Matrix>,
    partition: SensorPartition,
}

impl FactorizedWsn {
    /// Assembles a network from explicit factors, checking shapes.
    pub fn new(partition: SensorPartition, encoders: Vec<Matrix>, decoder_blocks: Vec<Matrix>) -> Result<Self> {
        let p = partition.sensor_count();
        if encoders.len() != p || decoder_blocks.len() != p {
            return Err(invalid("one encoder and one decoder block per sensor required"));
        }
        let m = partition.signal_dim();
        for j in 0..p {
            let (r, n) = (partition.rank(j), partition.obs_dim(j));
            if encoders[j].shape() != (r, n) {
                return Err(invalid(format!("encoder {j} must be {r}x{n}")));
            }
            if decoder_blocks[j].shape() != (m, r) {
                return Err(invalid(format!("decoder block {j} must be {m}x{r}")));
            }
        }
        Ok(Self {
            encoders,
            decoder_blocks,
            partition,
        })
    }

    pub fn partition(&self) -> &SensorPartition {
        &self.partition
    }

    pub fn encoders(&self) -> &[Matrix] {
        &self.encoders
    }

    pub fn decoder_blocks(&self) -> &[Matrix] {
        &self.decoder_blocks
    }

    /// `P = [P_1, ..., P_p]`, `m x r`.
    pub fn decoder(&self) -> Matrix {
        let m = self.partition.signal_dim();
        let mut out = Matrix::zeros(m, self.partition.rank_total());
        let mut col = 0;
        for p in &self.decoder_blocks {
            out.columns_mut(col, p.ncols()).copy_from(p);
            col += p.ncols();
        }
        out
    }

    /// The bank `F_j = P_j Q_j` represented by this network.
    pub fn bank(&self) -> CompressorBank {
        let blocks = self
            .decoder_blocks
            .iter()
            .zip(&self.encoders)
            .map(|(p, q)| p * q)
            .collect();
        CompressorBank::new(self.partition.clone(), blocks).expect("factor product respects rank bound")
    }
}

/// Splits every `F_j` through its SVD: `P_j = U_r sqrt(S_r)`,
/// `Q_j = sqrt(S_r) V_r^T`. When `rank(F_j) < r_j` the extra rows of `Q_j`
/// and columns of `P_j` are zero, so `u_j` always has `r_j` entries.
pub fn factorize_wsn(bank: &CompressorBank) -> Result<FactorizedWsn> {
    let part = bank.partition();
    let m = part.signal_dim();
    let mut encoders = Vec::with_capacity(part.sensor_count());
    let mut decoders = Vec::with_capacity(part.sensor_count());
    for (j, f) in bank.blocks().iter().enumerate() {
        let r = part.rank(j);
        let svd = Svd::new(f)?;
        let mut q = Matrix::zeros(r, part.obs_dim(j));
        let mut p = Matrix::zeros(m, r);
        for i in 0..r.min(svd.numeric_rank) {
            let root = libm::sqrt(svd.sigma[i]);
            p.set_column(i, &(svd.u.column(i) * root));
            q.set_row(i, &(svd.v.column(i) * root).transpose());
        }
        encoders.push(q);
        decoders.push(p);
    }
    Ok(FactorizedWsn {
        encoders,
        decoder_blocks: decoders,
        partition: part.clone(),
    })
}

/// Per-sensor transmitted vectors `u_j = Q_j y_j`, one column per sample.
pub fn compress(wsn: &FactorizedWsn, y: &Matrix) -> Result<Vec<Matrix>> {
    let part = &wsn.partition;
    if y.nrows() != part.obs_total() {
        return Err(invalid(format!(
            "observations have {} rows, expected {}",
            y.nrows(),
            part.obs_total()
        )));
    }
    Ok(wsn
        .encoders
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let r = part.obs_range(j);
            q * y.rows(r.start, r.len())
        })
        .collect())
}

/// Fusion-center estimate `x_hat = sum_j P_j u_j`.
pub fn reconstruct(wsn: &FactorizedWsn, u: &[Matrix]) -> Result<Matrix> {
    let part = &wsn.partition;
    if u.len() != part.sensor_count() {
        return Err(invalid(format!("expected {} compressed blocks", part.sensor_count())));
    }
    let samples = u[0].ncols();
    let mut out = Matrix::zeros(part.signal_dim(), samples);
    for (j, (p, u_j)) in wsn.decoder_blocks.iter().zip(u).enumerate() {
        if u_j.shape() != (part.rank(j), samples) {
            return Err(invalid(format!(
                "compressed block {j} must be {}x{samples}, got {:?}",
                part.rank(j),
                u_j.shape()
            )));
        }
        out.gemm(1.0, p, u_j, 1.0);
    }
    Ok(out)
}

/// `||E_xx^{1/2}||^2 - ||E_xy (E_yy^{1/2})^+||^2 + ||E_xy (E_yy^{1/2})^+ - F E_yy^{1/2}||^2`.
pub fn analytic_mse(model: &SecondMomentModel, bank: &CompressorBank) -> Result<f64> {
    reduce_problem(model)?.analytic_mse(bank)
}

/// `||X - F Y||^2 / s`.
pub fn empirical_mse(ens: &SampleEnsemble, bank: &CompressorBank) -> Result<f64> {
    ens.check_partition(bank.partition())?;
    let err = ens.x() - bank.apply(ens.y())?;
    Ok(frobenius_sq(&err) / ens.sample_count() as f64)
}
