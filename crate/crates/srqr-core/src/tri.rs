//! Triangular solves shared by the sketch updates, the certification
//! quantities, and the least-squares paths.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

fn check_square(r: &DenseMatrix) -> Result<usize> {
    if r.rows() != r.cols() {
        return Err(Error::ShapeMismatch {
            left_rows: r.rows(),
            left_cols: r.cols(),
            right_rows: r.cols(),
            right_cols: r.cols(),
        });
    }
    Ok(r.rows())
}

/// Solves `R x = b` in place for upper triangular `R`.
pub fn solve_upper(r: &DenseMatrix, b: &mut [f64]) -> Result<()> {
    let n = check_square(r)?;
    debug_assert_eq!(b.len(), n);
    for i in (0..n).rev() {
        let mut acc = b[i];
        let col_start = i + 1;
        for j in col_start..n {
            acc -= r.get(i, j) * b[j];
        }
        let d = r.get(i, i);
        if d == 0.0 {
            return Err(Error::SingularTriangle { index: i });
        }
        b[i] = acc / d;
    }
    Ok(())
}

/// Solves `R^T x = b` in place for upper triangular `R` (forward
/// substitution on the rows of `R`).
pub fn solve_upper_transpose(r: &DenseMatrix, b: &mut [f64]) -> Result<()> {
    let n = check_square(r)?;
    debug_assert_eq!(b.len(), n);
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= r.get(j, i) * b[j];
        }
        let d = r.get(i, i);
        if d == 0.0 {
            return Err(Error::SingularTriangle { index: i });
        }
        b[i] = acc / d;
    }
    Ok(())
}

/// Column 2-norms of `R^{-T}` for upper triangular `R`, via one transposed
/// solve per unit vector.
pub fn inverse_transpose_col_norms(r: &DenseMatrix) -> Result<Vec<f64>> {
    let n = check_square(r)?;
    let mut norms = Vec::with_capacity(n);
    let mut x = alloc::vec![0.0; n];
    for j in 0..n {
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        solve_upper_transpose(r, &mut x)?;
        norms.push(x.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok(norms)
}

/// Largest column 2-norm of `R^{-T}`: the (1,2) norm used by the pivot
/// certification quantities.
pub fn inverse_transpose_max_col_norm(r: &DenseMatrix) -> Result<f64> {
    Ok(inverse_transpose_col_norms(r)?
        .into_iter()
        .fold(0.0_f64, f64::max))
}

/// 1-norm (max absolute column sum) of `W^{-1}` for triangular `W`, upper or
/// lower decided by `lower`.
pub fn inverse_one_norm(w: &DenseMatrix, lower: bool) -> Result<f64> {
    let n = check_square(w)?;
    let mut worst = 0.0_f64;
    let mut x = alloc::vec![0.0; n];
    for j in 0..n {
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        if lower {
            // forward substitution on lower triangular W
            for i in 0..n {
                let mut acc = x[i];
                for t in 0..i {
                    acc -= w.get(i, t) * x[t];
                }
                let d = w.get(i, i);
                if d == 0.0 {
                    return Err(Error::SingularTriangle { index: i });
                }
                x[i] = acc / d;
            }
        } else {
            solve_upper(w, &mut x)?;
        }
        worst = worst.max(x.iter().map(|v| v.abs()).sum());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_match_direct_multiplication() {
        let r = DenseMatrix::from_rows(&[&[2.0, 1.0, -1.0], &[0.0, 3.0, 0.5], &[0.0, 0.0, 1.5]])
            .unwrap();
        let x_true = [1.0, -2.0, 4.0];
        let mut b = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i] += r.get(i, j) * x_true[j];
            }
        }
        solve_upper(&r, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-13);
        }

        let mut bt = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                bt[i] += r.get(j, i) * x_true[j];
            }
        }
        solve_upper_transpose(&r, &mut bt).unwrap();
        for (a, e) in bt.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_diagonal_is_reported() {
        let r = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            solve_upper(&r, &mut [1.0, 1.0]),
            Err(Error::SingularTriangle { index: 1 })
        ));
    }

    #[test]
    fn inverse_norms_on_diagonal_matrix() {
        let r = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 0.5]]).unwrap();
        let norms = inverse_transpose_col_norms(&r).unwrap();
        assert!((norms[0] - 0.5).abs() < 1e-15);
        assert!((norms[1] - 2.0).abs() < 1e-15);
        assert!((inverse_one_norm(&r, false).unwrap() - 2.0).abs() < 1e-15);
    }
}
