//! Restoring triangular structure after round-robin column rotations.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::householder::{apply_rotation_left, GivensRotation};
use crate::matrix::DenseMatrix;

/// Rotates `r` back to upper-trapezoidal form after a round-robin column
/// rotation over positions `start_col..=end_col` left one subdiagonal entry
/// per shifted column.
///
/// Scans columns `start_col..end_col`; each nonzero entry at `(j+1, j)` is
/// annihilated by a plane rotation of rows `(j, j+1)` applied across the full
/// trailing width. The rotations are returned in application order so the
/// caller can absorb them into its orthogonal factor; column norms of the
/// implied product are preserved. Entries below the first subdiagonal in the
/// scanned window are rejected as a malformed spike.
pub fn givens_restore(
    r: &mut DenseMatrix,
    start_col: usize,
    end_col: usize,
) -> Result<Vec<GivensRotation>> {
    let m = r.rows();
    assert!(end_col < r.cols() && end_col < m);
    let mut rotations = Vec::new();
    for j in start_col..end_col {
        for i in j + 2..=end_col {
            let x = r.get(i, j);
            if x != 0.0 {
                return Err(Error::SpikeStructure { row: i, col: j });
            }
        }
        let a = r.get(j, j);
        let b = r.get(j + 1, j);
        if b == 0.0 {
            continue;
        }
        let h = a.hypot(b);
        let c = a / h;
        let s = b / h;
        apply_rotation_left(r, j, c, s, j);
        r.set(j + 1, j, 0.0);
        rotations.push(GivensRotation { row: j, c, s });
    }
    Ok(rotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::svd_oracle;

    fn upper_triangular_3x3() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            &[2.0, -1.0, 0.5],
            &[0.0, 1.5, -0.25],
            &[0.0, 0.0, 0.75],
        ])
        .unwrap()
    }

    #[test]
    fn already_triangular_is_untouched() {
        let mut r = upper_triangular_3x3();
        let orig = r.clone();
        let rotations = givens_restore(&mut r, 0, 2).unwrap();
        assert!(rotations.is_empty());
        assert_eq!(r, orig);
    }

    #[test]
    fn round_robin_keeps_singular_values() {
        let mut r = upper_triangular_3x3();
        let before = svd_oracle(&r).unwrap().sigma;
        r.rotate_cols_left(0, 2);
        let rotations = givens_restore(&mut r, 0, 2).unwrap();
        assert_eq!(rotations.len(), 2);
        for j in 0..3 {
            for i in j + 1..3 {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
        let after = svd_oracle(&r).unwrap().sigma;
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() <= 1e-12 * before[0]);
        }
    }

    #[test]
    fn last_window_spike_needs_one_rotation() {
        let mut r = upper_triangular_3x3();
        r.rotate_cols_left(1, 2);
        let rotations = givens_restore(&mut r, 1, 2).unwrap();
        assert_eq!(rotations.len(), 1);
    }

    #[test]
    fn rotations_fold_into_q_factor() {
        // manufacture A = Q R, rotate columns, restore, and check A P = Q' R'
        let a = DenseMatrix::from_rows(&[
            &[1.0, 2.0, 3.0],
            &[4.0, 5.0, 6.0],
            &[7.0, 8.0, 10.0],
        ])
        .unwrap();
        let (q, mut r) = crate::householder::householder_qr(&a, 3).unwrap();
        let mut q = q;
        let mut perm = crate::perm::Permutation::identity(3);
        r.rotate_cols_left(0, 2);
        perm.rotate_left(0, 2);
        for g in givens_restore(&mut r, 0, 2).unwrap() {
            q.push_rotation(g);
        }
        let mut qr = r.clone();
        q.apply_q(&mut qr).unwrap();
        let ap = perm.apply_to_cols(&a).unwrap();
        let err = qr.sub(&ap).unwrap().frobenius_norm();
        assert!(err <= 1e-13 * a.frobenius_norm());
    }

    #[test]
    fn deep_spike_is_rejected() {
        let mut r = upper_triangular_3x3();
        r.set(2, 0, 0.3);
        assert!(matches!(
            givens_restore(&mut r, 0, 2),
            Err(Error::SpikeStructure { row: 2, col: 0 })
        ));
    }
}
