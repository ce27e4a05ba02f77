//! Desk-scale singular value oracle (one-sided Jacobi) plus power-iteration
//! helpers for spectral norms.
//!
//! The oracle backs bound verification, spectrum comparisons, and the SVD
//! truncation of the leading rows of R. One-sided Jacobi is used for its
//! accuracy on small singular values; it is not meant to be fast beyond a few
//! thousand columns.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};
use crate::tri;

/// Hard size cap for the oracle.
pub const MAX_ORACLE_DIM: usize = 2000;

const MAX_SWEEPS: usize = 100;
/// Relative off-diagonal threshold: a column pair counts as orthogonal when
/// `|g_i . g_j| <= JACOBI_TOL * |g_i| * |g_j|`.
const JACOBI_TOL: f64 = 1e-14;

/// Thin SVD `M = U * diag(sigma) * V^T` with `sigma` sorted descending.
#[derive(Debug, Clone)]
pub struct SvdOracle {
    pub sigma: Vec<f64>,
    /// `m x r` left factor, `r = min(m, n)`.
    pub u: DenseMatrix,
    /// `n x r` right factor.
    pub v: DenseMatrix,
}

impl SvdOracle {
    /// `U_k * diag(sigma_k) * V_k^T`, the rank-`k` truncation.
    pub fn truncate(&self, k: usize) -> DenseMatrix {
        let m = self.u.rows();
        let n = self.v.rows();
        let k = k.min(self.sigma.len());
        let mut out = DenseMatrix::zeros(m, n);
        for t in 0..k {
            let s = self.sigma[t];
            if s == 0.0 {
                break;
            }
            let ucol = self.u.col(t);
            for j in 0..n {
                let w = s * self.v.get(j, t);
                if w == 0.0 {
                    continue;
                }
                let ocol = out.col_mut(j);
                for i in 0..m {
                    ocol[i] += w * ucol[i];
                }
            }
        }
        out
    }
}

fn rotate_col_pair(m: &mut DenseMatrix, i: usize, j: usize, c: f64, s: f64) {
    let (ci, cj) = m.col_pair_mut(i, j);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Sorts columns of `g` and `v` (and `colsq`) by descending `colsq`.
fn sort_columns_desc(g: &mut DenseMatrix, v: &mut DenseMatrix, colsq: &mut [f64]) {
    let n = colsq.len();
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            if colsq[j] > colsq[best] {
                best = j;
            }
        }
        if best != i {
            g.swap_cols(i, best);
            v.swap_cols(i, best);
            colsq.swap(i, best);
        }
    }
}

/// One-sided Jacobi SVD, iterated to convergence.
///
/// Works on the taller orientation internally; factors are returned for the
/// matrix as given. Fails with [`Error::NoConvergence`] after the sweep cap,
/// which signals genuinely pathological input at this scale.
pub fn svd_oracle(a: &DenseMatrix) -> Result<SvdOracle> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let r = a.rows().min(a.cols());
    if r > MAX_ORACLE_DIM {
        return Err(Error::OracleTooLarge {
            dim: r,
            max: MAX_ORACLE_DIM,
        });
    }
    if a.rows() < a.cols() {
        let t = svd_oracle(&a.transpose())?;
        return Ok(SvdOracle {
            sigma: t.sigma,
            u: t.v,
            v: t.u,
        });
    }

    let n = a.cols();
    let mut g = a.clone();
    let mut v = DenseMatrix::identity(n);
    let mut colsq: Vec<f64> = (0..n).map(|j| g.col_norm_sq_from(j, 0)).collect();

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        // refresh norms and apply de Rijk ordering once per sweep
        for (j, sq) in colsq.iter_mut().enumerate() {
            *sq = g.col_norm_sq_from(j, 0);
        }
        sort_columns_desc(&mut g, &mut v, &mut colsq);

        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let (a_sq, b_sq) = (colsq[i], colsq[j]);
                if a_sq == 0.0 || b_sq == 0.0 {
                    continue;
                }
                let gdot = dot(g.col(i), g.col(j));
                if gdot.abs() <= JACOBI_TOL * (a_sq * b_sq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b_sq - a_sq) / (2.0 * gdot);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_col_pair(&mut g, i, j, c, s);
                rotate_col_pair(&mut v, i, j, c, s);
                colsq[i] = (a_sq - t * gdot).max(0.0);
                colsq[j] = b_sq + t * gdot;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: MAX_SWEEPS,
        });
    }

    // exact norms for the final singular values
    for (j, sq) in colsq.iter_mut().enumerate() {
        *sq = g.col_norm_sq_from(j, 0);
    }
    sort_columns_desc(&mut g, &mut v, &mut colsq);

    let mut sigma = Vec::with_capacity(n);
    let mut u = DenseMatrix::zeros(a.rows(), n);
    for j in 0..n {
        let s = colsq[j].sqrt();
        sigma.push(s);
        if s > 0.0 {
            let src = g.col(j);
            let dst = u.col_mut(j);
            for (d, x) in dst.iter_mut().zip(src) {
                *d = x / s;
            }
        }
    }
    Ok(SvdOracle { sigma, u, v })
}

/// Largest singular value by power iteration on `A^T A`.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let n = a.cols();
    // deterministic, mildly irregular start vector
    let mut z: Vec<f64> = (0..n).map(|i| 1.0 + 0.097 * ((i % 13) as f64)).collect();
    normalize(&mut z);
    let mut sigma = 0.0_f64;
    let mut y = alloc::vec![0.0; a.rows()];
    for _ in 0..1000 {
        // y = A z
        y.iter_mut().for_each(|x| *x = 0.0);
        for (j, &zj) in z.iter().enumerate() {
            crate::matrix::axpy(zj, a.col(j), &mut y);
        }
        let new_sigma = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        // z = A^T y, normalized
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = dot(a.col(j), &y);
        }
        if normalize(&mut z) == 0.0 {
            return 0.0;
        }
        if (new_sigma - sigma).abs() <= 1e-13 * new_sigma.max(f64::MIN_POSITIVE) {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}

/// Smallest singular value of a nonsingular upper triangular matrix,
/// computed as `1 / |R^{-1}|_2` by power iteration with triangular solves.
///
/// Resolves values far below `eps * sigma_max`, where a dense SVD cannot.
pub fn triangular_smallest_sv(r: &DenseMatrix) -> Result<f64> {
    if r.rows() != r.cols() || r.is_empty() {
        return Err(Error::ShapeMismatch {
            left_rows: r.rows(),
            left_cols: r.cols(),
            right_rows: r.cols(),
            right_cols: r.cols(),
        });
    }
    let n = r.rows();
    let mut z: Vec<f64> = (0..n).map(|i| 1.0 + 0.083 * ((i % 11) as f64)).collect();
    normalize(&mut z);
    let mut lambda = 0.0_f64;
    for _ in 0..2000 {
        // z <- R^{-1} R^{-T} z, tracking |.| growth
        tri::solve_upper_transpose(r, &mut z)?;
        tri::solve_upper(r, &mut z)?;
        let new_lambda = normalize(&mut z);
        if new_lambda == 0.0 {
            return Err(Error::SingularTriangle { index: 0 });
        }
        if (new_lambda - lambda).abs() <= 1e-13 * new_lambda {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    Ok(1.0 / lambda.sqrt())
}

fn normalize(z: &mut [f64]) -> f64 {
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        z.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}
