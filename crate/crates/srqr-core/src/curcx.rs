//! CUR and CX decompositions: low-rank approximations built from actual
//! columns (and rows) of the matrix, selected by spectrum-revealing pivots,
//! with least-squares optimal middle factors.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::householder::householder_qr;
use crate::matrix::DenseMatrix;
use crate::qrcp::qrcp;
use crate::srqr::{srqr, SrqrConfig};
use crate::tri;

/// Seed salt separating the row-selection stream from column selection.
const ROW_SELECTION_SALT: u64 = 0xA24B_AED4_963E_E407;

/// `A ~ C * U * R` with `C` actual columns and `R` actual rows of `A`.
#[derive(Debug, Clone)]
pub struct CurDecomposition {
    pub col_indices: Vec<usize>,
    pub row_indices: Vec<usize>,
    /// `c x r` middle factor, the least-squares solution for `|C U R - A|_F`.
    pub u: DenseMatrix,
}

impl CurDecomposition {
    pub fn reconstruct(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let c = a.select_cols(&self.col_indices);
        let r = a.select_rows(&self.row_indices);
        c.matmul(&self.u)?.matmul(&r)
    }

    pub fn relative_residual(&self, a: &DenseMatrix) -> Result<f64> {
        let denom = a.frobenius_norm();
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok(self.reconstruct(a)?.sub(a)?.frobenius_norm().min(f64::MAX) / denom)
    }
}

/// `A ~ C * X` with `C` actual columns of `A`.
#[derive(Debug, Clone)]
pub struct CxDecomposition {
    pub col_indices: Vec<usize>,
    /// `c x n` coefficient factor `C^+ A`.
    pub x: DenseMatrix,
}

impl CxDecomposition {
    pub fn reconstruct(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        a.select_cols(&self.col_indices).matmul(&self.x)
    }

    pub fn relative_residual(&self, a: &DenseMatrix) -> Result<f64> {
        let denom = a.frobenius_norm();
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok(self.reconstruct(a)?.sub(a)?.frobenius_norm() / denom)
    }
}

/// First `count` spectrum-revealing pivots of `a`. The working rank is
/// extended to cover `count` ordered pivots when necessary.
fn select_pivots(a: &DenseMatrix, count: usize, cfg: &SrqrConfig, salt: u64) -> Result<Vec<usize>> {
    let minmn = a.rows().min(a.cols());
    let mut run_cfg = *cfg;
    run_cfg.working_rank = cfg.working_rank.max(count).min(minmn);
    run_cfg.target_rank = cfg.target_rank.min(run_cfg.working_rank);
    run_cfg.compute_truncation = false;
    run_cfg.sketch.seed ^= salt;
    let out = srqr(a, run_cfg)?;
    Ok(out.factorization.perm.indices()[..count].to_vec())
}

/// CUR decomposition with `c` columns of `A`, `r` rows of `A` (pivoted on the
/// transpose), and `U = C^+ A R^+`.
pub fn cur(a: &DenseMatrix, c: usize, r: usize, cfg: &SrqrConfig) -> Result<CurDecomposition> {
    if c == 0 || c > a.cols() || r == 0 || r > a.rows() {
        return Err(Error::InvalidConfig("need 1 <= c <= n and 1 <= r <= m"));
    }
    let col_indices = select_pivots(a, c, cfg, 0)?;
    let row_indices = select_pivots(&a.transpose(), r, cfg, ROW_SELECTION_SALT)?;

    let cmat = a.select_cols(&col_indices);
    let rmat = a.select_rows(&row_indices);
    // U = (C^+ A) R^+, two least-squares solves
    let y = min_norm_lstsq(&cmat, a)?;
    let ut = min_norm_lstsq(&rmat.transpose(), &y.transpose())?;
    Ok(CurDecomposition {
        col_indices,
        row_indices,
        u: ut.transpose(),
    })
}

/// CX decomposition with `c` columns of `A` and `X = C^+ A`.
pub fn cx(a: &DenseMatrix, c: usize, cfg: &SrqrConfig) -> Result<CxDecomposition> {
    if c == 0 || c > a.cols() {
        return Err(Error::InvalidConfig("need 1 <= c <= n"));
    }
    let col_indices = select_pivots(a, c, cfg, 0)?;
    let cmat = a.select_cols(&col_indices);
    let x = min_norm_lstsq(&cmat, a)?;
    Ok(CxDecomposition { col_indices, x })
}

/// Minimum-norm least squares: the `X` of smallest Frobenius norm minimizing
/// `|M X - B|_F`.
///
/// Pivoted QR reveals the numerical rank (threshold `1e3 * eps * |r_00|`);
/// a second QR of the transposed leading rows completes the orthogonal
/// decomposition so rank-deficient systems get the minimum-norm solution.
pub fn min_norm_lstsq(m_mat: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let (q_rows, s) = (m_mat.rows(), m_mat.cols());
    let t = b.cols();
    if b.rows() != q_rows {
        return Err(Error::ShapeMismatch {
            left_rows: q_rows,
            left_cols: s,
            right_rows: b.rows(),
            right_cols: t,
        });
    }
    let f = qrcp(m_mat, q_rows.min(s))?;
    let tol = 1e3 * f64::EPSILON * f.r.get(0, 0).abs();
    let mut rank = 0;
    while rank < f.steps && f.r.get(rank, rank).abs() > tol {
        rank += 1;
    }
    if rank == 0 {
        return Ok(DenseMatrix::zeros(s, t));
    }

    let rt = f.r.submatrix(0, rank, 0, s);
    let mut qtb = b.clone();
    f.q.apply_qt(&mut qtb)?;
    let mut z = qtb.submatrix(0, rank, 0, t);

    // Rt^T = Q2 * T2, so Rt^+ = Q2 * T2^{-T}
    let (q2, t2full) = householder_qr(&rt.transpose(), rank)?;
    let t2 = t2full.submatrix(0, rank, 0, rank);
    for c_idx in 0..t {
        tri::solve_upper_transpose(&t2, z.col_mut(c_idx))?;
    }
    let mut y = DenseMatrix::zeros(s, t);
    y.set_submatrix(0, 0, &z);
    q2.apply_q(&mut y)?;

    // undo the column pivoting of M: solution rows scatter by the permutation
    let mut x = DenseMatrix::zeros(s, t);
    for (pos, &orig) in f.perm.indices().iter().enumerate() {
        for j in 0..t {
            x.set(orig, j, y.get(pos, j));
        }
    }
    Ok(x)
}
