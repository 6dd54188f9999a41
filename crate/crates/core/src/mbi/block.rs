//! Single-block rank-constrained least squares:
//! `min ||S - F G||` over `F` of rank at most `r`.

use alloc::format;

use crate::error::{invalid, Result};
use crate::linalg::{Matrix, Projector, Svd, Truncation};

/// Whether the minimizer of a block problem is unique (modulo the null-space
/// term, which is always fixed to zero here).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniqueness {
    Unique,
    NonUnique,
}

impl From<Truncation> for Uniqueness {
    fn from(t: Truncation) -> Self {
        match t {
            Truncation::Unique => Uniqueness::Unique,
            Truncation::Tied => Uniqueness::NonUnique,
        }
    }
}

/// Thin factors of a fixed `G = U diag(sigma) V^T` restricted to its
/// numerical rank.
///
/// With `W = S V`, `S R_G = W V^T` and `[S R_G]_r G^+ = [W]_r diag(1/sigma) U^T`,
/// so each block solve only needs the SVD of the `m x rank(G)` matrix `W`.
#[derive(Debug, Clone)]
pub(crate) struct BlockFactors {
    u: Matrix,
    inv_sigma: nalgebra::DVector<f64>,
    v: Matrix,
}

pub(crate) struct BlockSolution {
    pub block: Matrix,
    pub uniqueness: Uniqueness,
}

impl BlockFactors {
    pub fn new(g: &Matrix) -> Result<Self> {
        let f = Svd::new(g)?;
        let k = f.numeric_rank;
        let inv_sigma = nalgebra::DVector::from_iterator(k, f.sigma[..k].iter().map(|s| 1.0 / s));
        Ok(Self {
            u: f.range_basis(),
            inv_sigma,
            v: f.corange_basis(),
        })
    }

    pub fn rank(&self) -> usize {
        self.inv_sigma.len()
    }

    pub fn right_projector(&self) -> Projector {
        Projector::from_basis(&self.v)
    }

    pub fn pinv(&self) -> Matrix {
        let mut scaled = self.v.clone();
        for (mut col, &w) in scaled.column_iter_mut().zip(self.inv_sigma.iter()) {
            col *= w;
        }
        scaled * self.u.transpose()
    }

    /// `[S R_G]_r G^+` and whether the truncation was unique.
    pub fn solve(&self, s: &Matrix, r: usize) -> Result<BlockSolution> {
        let n_j = self.u.nrows();
        if self.rank() == 0 {
            return Ok(BlockSolution {
                block: Matrix::zeros(s.nrows(), n_j),
                uniqueness: Uniqueness::Unique,
            });
        }
        let w = s * &self.v;
        let f = Svd::new(&w)?;
        let mut coeffs = f.truncated(r);
        for (mut col, &inv) in coeffs.column_iter_mut().zip(self.inv_sigma.iter()) {
            col *= inv;
        }
        Ok(BlockSolution {
            block: coeffs * self.u.transpose(),
            uniqueness: f.truncation(r).into(),
        })
    }
}

fn check_shapes(s: &Matrix, g: &Matrix, r: usize) -> Result<()> {
    if s.ncols() != g.ncols() {
        return Err(invalid(format!(
            "S has {} columns but G has {}",
            s.ncols(),
            g.ncols()
        )));
    }
    if r == 0 || r > g.nrows() {
        return Err(invalid(format!(
            "rank bound must satisfy 1 <= r <= {} (got {r})",
            g.nrows()
        )));
    }
    Ok(())
}

/// Minimum-norm minimizer `[S R_G]_r G^+` of `||S - F G||` over rank-`r`
/// matrices `F`.
pub fn rank_constrained_lsq(s: &Matrix, g: &Matrix, r: usize) -> Result<Matrix> {
    check_shapes(s, g, r)?;
    Ok(BlockFactors::new(g)?.solve(s, r)?.block)
}

/// Reports whether the rank-`r` truncation of `S R_G` is unique, i.e.
/// `r >= rank(S R_G)` or `sigma_r(S R_G) > sigma_{r+1}(S R_G)`.
/// Informational only.
pub fn uniqueness_check(s: &Matrix, g: &Matrix, r: usize) -> Result<Uniqueness> {
    check_shapes(s, g, r)?;
    Ok(BlockFactors::new(g)?.solve(s, r)?.uniqueness)
}
