//! Column-major dense matrix storage and the handful of BLAS-like kernels
//! the factorizations are built from.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};

/// Dense real matrix in column-major order.
///
/// Constructors reject NaN and infinite entries; every algorithm in this
/// crate assumes finite input.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from a column-major buffer of length `rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                found: data.len(),
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; handy for literals in tests and IO.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DataLength {
                rows: r,
                cols: c,
                found: rows.iter().map(|row| row.len()).sum(),
            });
        }
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite);
                }
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = x;
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable access to two distinct columns at once.
    pub fn col_pair_mut(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert!(a != b && a < self.cols && b < self.cols);
        let rows = self.rows;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (head, tail) = self.data.split_at_mut(hi * rows);
        let first = &mut head[lo * rows..(lo + 1) * rows];
        let second = &mut tail[..rows];
        if a < b {
            (first, second)
        } else {
            (second, first)
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (ca, cb) = self.col_pair_mut(a, b);
        ca.swap_with_slice(cb);
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let rows = self.rows;
        for j in 0..self.cols {
            self.data.swap(a + j * rows, b + j * rows);
        }
    }

    /// Cyclic left rotation of columns `start..=end`: the column at `start`
    /// moves to `end`, everything in between shifts one slot left.
    pub fn rotate_cols_left(&mut self, start: usize, end: usize) {
        assert!(start <= end && end < self.cols);
        for j in start..end {
            self.swap_cols(j, j + 1);
        }
    }

    /// Reorders columns `start..` so that new column `start + j` is the old
    /// column `start + local[j]`.
    pub fn reorder_trailing_cols(&mut self, start: usize, local: &[usize]) {
        debug_assert_eq!(local.len(), self.cols - start);
        let rows = self.rows;
        let old: Vec<f64> = self.data[start * rows..].to_vec();
        for (j, &src) in local.iter().enumerate() {
            self.col_mut(start + j)
                .copy_from_slice(&old[src * rows..(src + 1) * rows]);
        }
    }

    /// Copy of the block with rows `r0..r1` and columns `c0..c1`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        let mut out = Self::zeros(r1 - r0, c1 - c0);
        for j in c0..c1 {
            out.col_mut(j - c0)
                .copy_from_slice(&self.col(j)[r0..r1]);
        }
        out
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for j in 0..block.cols {
            self.col_mut(c0 + j)[r0..r0 + block.rows].copy_from_slice(block.col(j));
        }
    }

    pub fn select_cols(&self, indices: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, indices.len());
        for (j, &src) in indices.iter().enumerate() {
            out.col_mut(j).copy_from_slice(self.col(src));
        }
        out
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut out = Self::zeros(indices.len(), self.cols);
        for j in 0..self.cols {
            let src = self.col(j);
            let dst = out.col_mut(j);
            for (i, &r) in indices.iter().enumerate() {
                dst[i] = src[r];
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            let src = self.col(j);
            for i in 0..self.rows {
                out.set(j, i, src[i]);
            }
        }
        out
    }

    /// `self * other`, column-major friendly loop order.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let bcol = other.col(j);
            let ocol = out.col_mut(j);
            for (k, &b) in bcol.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let acol = &self.data[k * self.rows..(k + 1) * self.rows];
                for i in 0..self.rows {
                    ocol[i] += b * acol[i];
                }
            }
        }
        Ok(out)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Squared 2-norm of column `j` restricted to rows `from..`.
    pub fn col_norm_sq_from(&self, j: usize, from: usize) -> f64 {
        self.col(j)[from..].iter().map(|x| x * x).sum()
    }

    /// Largest column 2-norm over all columns (the (1,2) operator norm).
    pub fn max_col_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.col_norm_sq_from(j, 0))
            .fold(0.0_f64, f64::max)
            .sqrt()
    }
}

/// y := y + alpha * x
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
