//! Second-moment models of the joint signal `(x, y)` and their estimation
//! from training samples.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::dmatrix;

use crate::error::{invalid, Result};
use crate::linalg::{ensure_finite, Matrix, SYMMETRY_TOL};

/// Dimensions of the signal, the per-sensor observations and the per-sensor
/// compression ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorPartition {
    signal_dim: usize,
    obs_dims: Vec<usize>,
    ranks: Vec<usize>,
    offsets: Vec<usize>,
}

impl SensorPartition {
    /// Requires `m >= 1`, `p >= 1`, every `n_j >= 1` and `1 <= r_j <= n_j`.
    pub fn new(signal_dim: usize, obs_dims: Vec<usize>, ranks: Vec<usize>) -> Result<Self> {
        if signal_dim == 0 {
            return Err(invalid("signal dimension m must be at least 1"));
        }
        if obs_dims.is_empty() {
            return Err(invalid("at least one sensor is required"));
        }
        if obs_dims.len() != ranks.len() {
            return Err(invalid(format!(
                "{} observation dims but {} ranks",
                obs_dims.len(),
                ranks.len()
            )));
        }
        for (j, (&n, &r)) in obs_dims.iter().zip(&ranks).enumerate() {
            if n == 0 {
                return Err(invalid(format!("sensor {j}: observation dim must be at least 1")));
            }
            if r == 0 || r > n {
                return Err(invalid(format!(
                    "sensor {j}: rank bound 1 <= r_j <= n_j violated (r_j = {r}, n_j = {n})"
                )));
            }
        }
        let mut offsets = Vec::with_capacity(obs_dims.len() + 1);
        offsets.push(0);
        for &n in &obs_dims {
            offsets.push(offsets.last().unwrap() + n);
        }
        Ok(Self {
            signal_dim,
            obs_dims,
            ranks,
            offsets,
        })
    }

    /// `p` identical sensors.
    pub fn uniform(signal_dim: usize, sensors: usize, obs_dim: usize, rank: usize) -> Result<Self> {
        Self::new(signal_dim, alloc::vec![obs_dim; sensors], alloc::vec![rank; sensors])
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn sensor_count(&self) -> usize {
        self.obs_dims.len()
    }

    pub fn obs_dims(&self) -> &[usize] {
        &self.obs_dims
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn obs_dim(&self, j: usize) -> usize {
        self.obs_dims[j]
    }

    pub fn rank(&self, j: usize) -> usize {
        self.ranks[j]
    }

    /// `n = n_1 + ... + n_p`.
    pub fn obs_total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// `r = r_1 + ... + r_p`.
    pub fn rank_total(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// Row range of sensor `j` inside the stacked observation vector.
    pub fn obs_range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Same observation dims, different ranks.
    pub fn with_ranks(&self, ranks: Vec<usize>) -> Result<Self> {
        Self::new(self.signal_dim, self.obs_dims.clone(), ranks)
    }

    /// Single-sensor partition for sensor `j`.
    pub fn single(&self, j: usize) -> Self {
        Self::new(self.signal_dim, alloc::vec![self.obs_dims[j]], alloc::vec![self.ranks[j]])
            .expect("sub-partition of a valid partition")
    }
}

/// Where a second-moment model came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Estimated { samples: usize },
}

/// `E_xx`, `E_xy`, `E_yy` with their sensor block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMomentModel {
    partition: SensorPartition,
    e_xx: Matrix,
    e_xy: Matrix,
    e_yy: Matrix,
    provenance: Provenance,
}

fn check_symmetric(m: &Matrix, what: &str) -> Result<()> {
    let asym = (m - m.transpose()).norm();
    if asym > SYMMETRY_TOL * m.norm() {
        return Err(invalid(format!("{what} is not symmetric (||A - A^T|| = {asym:e})")));
    }
    Ok(())
}

fn symmetrize(m: Matrix) -> Matrix {
    let t = m.transpose();
    (m + t) * 0.5
}

impl SecondMomentModel {
    /// Validates shapes, finiteness and symmetry. Positive semidefiniteness
    /// of `E_yy` is checked lazily when its square root is taken.
    pub fn new(
        partition: SensorPartition,
        e_xx: Matrix,
        e_xy: Matrix,
        e_yy: Matrix,
        provenance: Provenance,
    ) -> Result<Self> {
        let m = partition.signal_dim();
        let n = partition.obs_total();
        if e_xx.shape() != (m, m) {
            return Err(invalid(format!("E_xx must be {m}x{m}, got {:?}", e_xx.shape())));
        }
        if e_xy.shape() != (m, n) {
            return Err(invalid(format!("E_xy must be {m}x{n}, got {:?}", e_xy.shape())));
        }
        if e_yy.shape() != (n, n) {
            return Err(invalid(format!("E_yy must be {n}x{n}, got {:?}", e_yy.shape())));
        }
        ensure_finite(&e_xx, "E_xx")?;
        ensure_finite(&e_xy, "E_xy")?;
        ensure_finite(&e_yy, "E_yy")?;
        check_symmetric(&e_xx, "E_xx")?;
        check_symmetric(&e_yy, "E_yy")?;
        Ok(Self {
            partition,
            e_xx,
            e_xy,
            e_yy,
            provenance,
        })
    }

    pub fn partition(&self) -> &SensorPartition {
        &self.partition
    }

    pub fn e_xx(&self) -> &Matrix {
        &self.e_xx
    }

    pub fn e_xy(&self) -> &Matrix {
        &self.e_xy
    }

    pub fn e_yy(&self) -> &Matrix {
        &self.e_yy
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `E_{x y_j}`, `m x n_j`.
    pub fn e_xy_block(&self, j: usize) -> Matrix {
        let r = self.partition.obs_range(j);
        self.e_xy.columns(r.start, r.len()).into_owned()
    }

    /// `E_{y_i y_j}`, `n_i x n_j`.
    pub fn e_yy_block(&self, i: usize, j: usize) -> Matrix {
        let ri = self.partition.obs_range(i);
        let rj = self.partition.obs_range(j);
        self.e_yy.view((ri.start, rj.start), (ri.len(), rj.len())).into_owned()
    }

    /// The model seen by sensor `j` alone.
    pub fn sensor_view(&self, j: usize) -> Self {
        Self {
            partition: self.partition.single(j),
            e_xx: self.e_xx.clone(),
            e_xy: self.e_xy_block(j),
            e_yy: self.e_yy_block(j, j),
            provenance: self.provenance,
        }
    }

    /// Same matrices under different compression ranks.
    pub fn with_ranks(&self, ranks: Vec<usize>) -> Result<Self> {
        let mut out = self.clone();
        out.partition = self.partition.with_ranks(ranks)?;
        Ok(out)
    }

    /// `[E_xx E_xy; E_yx E_yy]`.
    pub fn joint(&self) -> Matrix {
        let m = self.partition.signal_dim();
        let n = self.partition.obs_total();
        let mut out = Matrix::zeros(m + n, m + n);
        out.view_mut((0, 0), (m, m)).copy_from(&self.e_xx);
        out.view_mut((0, m), (m, n)).copy_from(&self.e_xy);
        out.view_mut((m, 0), (n, m)).copy_from(&self.e_xy.transpose());
        out.view_mut((m, m), (n, n)).copy_from(&self.e_yy);
        out
    }
}

/// Training samples: one column per outcome; `y` stacks the sensors by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEnsemble {
    x: Matrix,
    y: Matrix,
}

impl SampleEnsemble {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(invalid(format!(
                "sample counts differ: x has {} columns, y has {}",
                x.ncols(),
                y.ncols()
            )));
        }
        if x.ncols() == 0 {
            return Err(invalid("ensemble needs at least one sample"));
        }
        ensure_finite(&x, "x samples")?;
        ensure_finite(&y, "y samples")?;
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn sample_count(&self) -> usize {
        self.x.ncols()
    }

    pub fn check_partition(&self, part: &SensorPartition) -> Result<()> {
        if self.x.nrows() != part.signal_dim() || self.y.nrows() != part.obs_total() {
            return Err(invalid(format!(
                "ensemble shape (x: {} rows, y: {} rows) does not match partition (m = {}, n = {})",
                self.x.nrows(),
                self.y.nrows(),
                part.signal_dim(),
                part.obs_total()
            )));
        }
        Ok(())
    }

    /// Rows of sensor `j`.
    pub fn sensor_block(&self, part: &SensorPartition, j: usize) -> Matrix {
        let r = part.obs_range(j);
        self.y.rows(r.start, r.len()).into_owned()
    }
}

/// Plain (uncentred) sample moments: `E_xy = X Y^T / s`, `E_yy = Y Y^T / s`,
/// `E_xx = X X^T / s`. Both symmetric estimates are symmetrized.
pub fn estimate_moments(ens: &SampleEnsemble, part: &SensorPartition) -> Result<SecondMomentModel> {
    ens.check_partition(part)?;
    let s = ens.sample_count();
    let scale = 1.0 / s as f64;
    let e_xx = symmetrize(ens.x() * ens.x().transpose() * scale);
    let e_xy = ens.x() * ens.y().transpose() * scale;
    let e_yy = symmetrize(ens.y() * ens.y().transpose() * scale);
    SecondMomentModel::new(
        part.clone(),
        e_xx,
        e_xy,
        e_yy,
        Provenance::Estimated { samples: s },
    )
}

/// Partitions the Gram matrix `A A^T` into a joint model; `A` needs
/// `m + n` rows.
pub fn joint_model_from_factor(a: &Matrix, part: &SensorPartition) -> Result<SecondMomentModel> {
    let m = part.signal_dim();
    let n = part.obs_total();
    if a.nrows() != m + n {
        return Err(invalid(format!(
            "factor must have m + n = {} rows, got {}",
            m + n,
            a.nrows()
        )));
    }
    ensure_finite(a, "factor")?;
    let joint = symmetrize(a * a.transpose());
    SecondMomentModel::new(
        part.clone(),
        joint.view((0, 0), (m, m)).into_owned(),
        joint.view((0, m), (m, n)).into_owned(),
        joint.view((m, m), (n, n)).into_owned(),
        Provenance::Exact,
    )
}

/// Three-component signal observed by two sensors with independent white
/// noise (`sigma_1 = 0.2`, `sigma_2 = 0.4`), ranks `r = (1, 1)`.
pub fn example1_model() -> SecondMomentModel {
    let e_xx = dmatrix![
        0.585, 0.270, 0.390;
        0.270, 0.405, 0.180;
        0.390, 0.180, 0.260
    ];
    let sigmas = [0.2, 0.4];
    let part = SensorPartition::new(3, alloc::vec![3, 3], alloc::vec![1, 1]).expect("valid");
    let mut e_xy = Matrix::zeros(3, 6);
    let mut e_yy = Matrix::zeros(6, 6);
    for i in 0..2 {
        e_xy.view_mut((0, 3 * i), (3, 3)).copy_from(&e_xx);
        for j in 0..2 {
            let mut block = e_xx.clone();
            if i == j {
                block += Matrix::identity(3, 3) * (sigmas[i] * sigmas[i]);
            }
            e_yy.view_mut((3 * i, 3 * j), (3, 3)).copy_from(&block);
        }
    }
    SecondMomentModel::new(part, e_xx, e_xy, e_yy, Provenance::Exact).expect("valid model")
}
