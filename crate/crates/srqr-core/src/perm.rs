//! Column permutations tracked as index vectors.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Permutation of `{0, .., n-1}`.
///
/// `indices[j]` is the original column occupying position `j` after
/// permutation, so `(A * P).col(j) == A.col(indices[j])`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Permutation {
    indices: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        let n = indices.len();
        let mut seen = alloc::vec![false; n];
        for &i in &indices {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation);
            }
            seen[i] = true;
        }
        Ok(Self { indices })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_identity(&self) -> bool {
        self.indices.iter().enumerate().all(|(j, &i)| i == j)
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.indices.swap(a, b);
    }

    /// Cyclic left rotation of positions `start..=end`, mirroring
    /// [`DenseMatrix::rotate_cols_left`].
    pub fn rotate_left(&mut self, start: usize, end: usize) {
        self.indices[start..=end].rotate_left(1);
    }

    /// Reorders positions `start..` by a local permutation of the tail.
    pub fn reorder_trailing(&mut self, start: usize, local: &[usize]) {
        debug_assert_eq!(local.len(), self.len() - start);
        let old = self.indices[start..].to_vec();
        for (j, &src) in local.iter().enumerate() {
            self.indices[start + j] = old[src];
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = alloc::vec![0usize; self.len()];
        for (j, &i) in self.indices.iter().enumerate() {
            inv[i] = j;
        }
        Self { indices: inv }
    }

    /// `A * P`: gathers columns of `a` in permuted order.
    pub fn apply_to_cols(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        if a.cols() != self.len() {
            return Err(Error::ShapeMismatch {
                left_rows: a.rows(),
                left_cols: a.cols(),
                right_rows: self.len(),
                right_cols: self.len(),
            });
        }
        Ok(a.select_cols(&self.indices))
    }
}
