//! Dense linear-algebra primitives: SVD with a numerical rank, truncated SVD,
//! Moore-Penrose pseudo-inverse, PSD square root and range projectors.
//!
//! Every routine rejects non-finite input and is deterministic for a fixed
//! input. Singular values are always returned in non-increasing order; equal
//! values keep their column order from the Jacobi sweeps.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

/// Relative tolerance used when checking symmetry of covariance-like input.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Tolerated negative eigenvalue, relative to the Frobenius norm, before a
/// matrix is declared not PSD.
pub const PSD_TOL: f64 = 1e-8;

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub(crate) fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(alloc::format!("{what} has non-finite entries")))
    }
}

/// `sigma_max * max(rows, cols) * eps`.
pub fn default_rank_tol(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    sigma_max * rows.max(cols) as f64 * f64::EPSILON
}

/// Whether a rank-`r` truncation is uniquely determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// `r >= numeric_rank` or `sigma_r > sigma_{r+1}`.
    Unique,
    /// `sigma_r` and `sigma_{r+1}` are numerically equal; the leading `r`
    /// triplets in solver order were kept.
    Tied,
}

/// Thin singular value decomposition `C = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: Matrix,
    /// Non-increasing, non-negative, length `k`.
    pub sigma: Vec<f64>,
    /// `cols x k` with orthonormal columns.
    pub v: Matrix,
    /// Number of singular values strictly above `rank_tol`.
    pub numeric_rank: usize,
    pub rank_tol: f64,
}

impl Svd {
    pub fn new(c: &Matrix) -> Result<Self> {
        Self::with_rank_tol(c, None)
    }

    /// SVD with an explicit rank threshold; `None` selects
    /// [`default_rank_tol`].
    pub fn with_rank_tol(c: &Matrix, rank_tol: Option<f64>) -> Result<Self> {
        ensure_finite(c, "svd input")?;
        let (rows, cols) = c.shape();
        let k = rows.min(cols);
        if k == 0 {
            return Ok(Self {
                u: Matrix::zeros(rows, 0),
                sigma: Vec::new(),
                v: Matrix::zeros(cols, 0),
                numeric_rank: 0,
                rank_tol: rank_tol.unwrap_or(0.0),
            });
        }

        let (raw_u, raw_sigma, raw_v) = if rows >= cols {
            one_sided_jacobi(c)?
        } else {
            let (u, s, v) = one_sided_jacobi(&c.transpose())?;
            (v, s, u)
        };

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| raw_sigma[b].partial_cmp(&raw_sigma[a]).expect("finite singular values"));

        let mut u = Matrix::zeros(rows, k);
        let mut v = Matrix::zeros(cols, k);
        let mut sigma = Vec::with_capacity(k);
        for (dst, &src) in order.iter().enumerate() {
            sigma.push(raw_sigma[src]);
            u.set_column(dst, &raw_u.column(src));
            v.set_column(dst, &raw_v.column(src));
        }
        let negligible = default_rank_tol(sigma[0], rows, cols);
        let first_negligible = sigma.iter().take_while(|&&s| s > negligible).count();
        orthonormalize_tail(&mut u, first_negligible);
        orthonormalize_tail(&mut v, first_negligible);

        let tol = rank_tol.unwrap_or_else(|| default_rank_tol(sigma[0], rows, cols));
        let numeric_rank = sigma.iter().take_while(|&&s| s > tol).count();
        Ok(Self {
            u,
            sigma,
            v,
            numeric_rank,
            rank_tol: tol,
        })
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    /// `sum_{i < min(r, numeric_rank)} sigma_i u_i v_i^T`.
    pub fn truncated(&self, r: usize) -> Matrix {
        let keep = r.min(self.numeric_rank);
        let mut out = Matrix::zeros(self.rows(), self.cols());
        for i in 0..keep {
            out.ger(self.sigma[i], &self.u.column(i), &self.v.column(i), 1.0);
        }
        out
    }

    pub fn truncation(&self, r: usize) -> Truncation {
        if r == 0 || r >= self.numeric_rank {
            return Truncation::Unique;
        }
        if self.sigma[r - 1] - self.sigma[r] > self.rank_tol {
            Truncation::Unique
        } else {
            Truncation::Tied
        }
    }

    /// Pseudo-inverse from the retained singular triplets.
    pub fn pinv(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols(), self.rows());
        for i in 0..self.numeric_rank {
            out.ger(1.0 / self.sigma[i], &self.v.column(i), &self.u.column(i), 1.0);
        }
        out
    }

    /// Leading `numeric_rank` columns of `U`.
    pub fn range_basis(&self) -> Matrix {
        self.u.columns(0, self.numeric_rank).into_owned()
    }

    /// Leading `numeric_rank` columns of `V`.
    pub fn corange_basis(&self) -> Matrix {
        self.v.columns(0, self.numeric_rank).into_owned()
    }
}

pub fn svd(c: &Matrix) -> Result<Svd> {
    Svd::new(c)
}

/// Best Frobenius rank-`r` approximation `[C]_r`.
pub fn truncated(c: &Matrix, r: usize) -> Result<Matrix> {
    Ok(Svd::new(c)?.truncated(r))
}

/// `[C]_r` together with a non-fatal flag reporting whether the truncation
/// was unique.
pub fn truncated_with_diagnostic(c: &Matrix, r: usize) -> Result<(Matrix, Truncation)> {
    let f = Svd::new(c)?;
    Ok((f.truncated(r), f.truncation(r)))
}

/// Moore-Penrose pseudo-inverse; singular values at or below the default
/// rank threshold are treated as zero.
pub fn pinv(c: &Matrix) -> Result<Matrix> {
    Ok(Svd::new(c)?.pinv())
}

fn symmetrized(m: Matrix) -> Matrix {
    let t = m.transpose();
    (m + t) * 0.5
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD of a matrix with `rows >= cols`; returns thin,
/// unsorted `(U, sigma, V)`.
fn one_sided_jacobi(c: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (rows, cols) = c.shape();
    let mut w = c.clone();
    let mut v = Matrix::identity(cols, cols);
    let floor = frobenius_sq(c) * f64::EPSILON * f64::EPSILON * f64::EPSILON;
    let tol = rows as f64 * f64::EPSILON;
    let mut converged = cols < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..cols - 1 {
            for j in i + 1..cols {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                let scale = libm::sqrt(alpha * beta);
                if scale <= floor || gamma.abs() <= tol * scale {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let cs = 1.0 / libm::sqrt(1.0 + t * t);
                let sn = cs * t;
                rotate_columns(&mut w, i, j, cs, sn);
                rotate_columns(&mut v, i, j, cs, sn);
                rotated = true;
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence("singular value decomposition"));
    }

    let mut sigma = Vec::with_capacity(cols);
    let mut u = Matrix::zeros(rows, cols);
    for i in 0..cols {
        let s = w.column(i).norm();
        sigma.push(s);
        if s > 0.0 {
            u.set_column(i, &(w.column(i) / s));
        }
    }
    Ok((u, sigma, v))
}

fn rotate_columns(m: &mut Matrix, i: usize, j: usize, cs: f64, sn: f64) {
    for r in 0..m.nrows() {
        let a = m[(r, i)];
        let b = m[(r, j)];
        m[(r, i)] = cs * a - sn * b;
        m[(r, j)] = sn * a + cs * b;
    }
}

/// Re-orthonormalizes columns `from..` against all earlier columns, filling
/// in standard basis directions where a column has collapsed.
fn orthonormalize_tail(q: &mut Matrix, from: usize) {
    let (rows, cols) = q.shape();
    let mut next_basis = 0;
    for i in from..cols {
        let mut col = q.column(i).into_owned();
        let mut ok = false;
        loop {
            for _ in 0..2 {
                for j in 0..i {
                    let proj = q.column(j).dot(&col);
                    col.axpy(-proj, &q.column(j), 1.0);
                }
            }
            let n = col.norm();
            if n > 0.5 {
                col /= n;
                ok = true;
                break;
            }
            if next_basis >= rows {
                break;
            }
            col = nalgebra::DVector::zeros(rows);
            col[next_basis] = 1.0;
            next_basis += 1;
        }
        if !ok {
            col.fill(0.0);
        }
        q.set_column(i, &col);
    }
}

/// Symmetric PSD square root through a symmetric eigendecomposition.
///
/// Eigenvalues in `[-PSD_TOL * ||c||, n * eps * |lambda|_max]` are clamped to
/// zero, so the root has the same numerical rank as `c`.
pub fn psd_sqrt(c: &Matrix) -> Result<Matrix> {
    ensure_finite(c, "psd_sqrt input")?;
    if !c.is_square() {
        return Err(invalid("psd_sqrt requires a square matrix"));
    }
    let n = c.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = c.norm();
    let asym = (c - c.transpose()).norm();
    if asym > SYMMETRY_TOL * norm {
        return Err(invalid(alloc::format!(
            "psd_sqrt input not symmetric: ||C - C^T|| = {asym:e}"
        )));
    }

    let eig = SymmetricEigen::try_new(symmetrized(c.clone()), f64::EPSILON, 0)
        .ok_or(Error::NoConvergence("symmetric eigendecomposition"))?;
    let tolerance = PSD_TOL * norm;
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let zero_tol = lambda_max * n as f64 * f64::EPSILON;

    let mut out = Matrix::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tolerance {
            return Err(Error::NotPsd {
                eigenvalue: lambda,
                tolerance,
            });
        }
        if lambda > zero_tol {
            let col = eig.eigenvectors.column(i);
            out.ger(libm::sqrt(lambda), &col, &col, 1.0);
        }
    }
    Ok(symmetrized(out))
}

/// Orthogonal projector, symmetric and idempotent.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(Matrix);

impl Projector {
    pub(crate) fn from_basis(basis: &Matrix) -> Self {
        Projector(symmetrized(basis * basis.transpose()))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// `L_C`: projector onto the range of `C`.
pub fn left_projector(c: &Matrix) -> Result<Projector> {
    Ok(Projector::from_basis(&Svd::new(c)?.range_basis()))
}

/// `R_C`: projector onto the range of `C^T`.
pub fn right_projector(c: &Matrix) -> Result<Projector> {
    Ok(Projector::from_basis(&Svd::new(c)?.corange_basis()))
}
