//! Householder reflectors, Givens rotations, and the accumulated orthogonal
//! factor of a (pivoted) QR factorization.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, DenseMatrix};

/// Elementary reflector `H = I - tau * v * v^T` acting on rows
/// `offset..offset + v.len()`. Unit-diagonal convention: `v[0] == 1`.
#[derive(Debug, Clone)]
pub struct Reflector {
    pub offset: usize,
    pub v: Vec<f64>,
    pub tau: f64,
}

/// Plane rotation on rows `(row, row + 1)`:
/// `[x; y] -> [c*x + s*y; -s*x + c*y]`.
#[derive(Debug, Clone, Copy)]
pub struct GivensRotation {
    pub row: usize,
    pub c: f64,
    pub s: f64,
}

#[derive(Debug, Clone)]
enum Transform {
    Reflect(Reflector),
    Rotate(GivensRotation),
}

/// Orthogonal factor `Q` kept as a product of elementary transforms.
///
/// The transforms are recorded in the order they were applied to the working
/// matrix, i.e. `W = U_s .. U_1 * (A * P)` and `Q = U_1^T .. U_s^T`, so that
/// `A * P = Q * W` holds at every stage. Reflectors are their own transpose;
/// rotations are stored as applied.
#[derive(Debug, Clone)]
pub struct QFactor {
    rows: usize,
    ops: Vec<Transform>,
}

impl QFactor {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            ops: Vec::new(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn reflector_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|t| matches!(t, Transform::Reflect(_)))
            .count()
    }

    pub fn rotation_count(&self) -> usize {
        self.ops.len() - self.reflector_count()
    }

    pub fn push_reflector(&mut self, r: Reflector) {
        debug_assert!(r.offset + r.v.len() <= self.rows);
        debug_assert!(r.v.is_empty() || r.v[0] == 1.0);
        self.ops.push(Transform::Reflect(r));
    }

    pub fn push_rotation(&mut self, g: GivensRotation) {
        debug_assert!(g.row + 1 < self.rows);
        self.ops.push(Transform::Rotate(g));
    }

    fn check_left(&self, m: &DenseMatrix) -> Result<()> {
        if m.rows() != self.rows {
            return Err(Error::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.rows,
                right_rows: m.rows(),
                right_cols: m.cols(),
            });
        }
        Ok(())
    }

    /// `M <- Q^T * M`.
    pub fn apply_qt(&self, m: &mut DenseMatrix) -> Result<()> {
        self.check_left(m)?;
        for op in &self.ops {
            match op {
                Transform::Reflect(r) => apply_reflector_left(m, r, 0, m.cols()),
                Transform::Rotate(g) => apply_rotation_left(m, g.row, g.c, g.s, 0),
            }
        }
        Ok(())
    }

    /// `M <- Q * M`.
    pub fn apply_q(&self, m: &mut DenseMatrix) -> Result<()> {
        self.check_left(m)?;
        for op in self.ops.iter().rev() {
            match op {
                Transform::Reflect(r) => apply_reflector_left(m, r, 0, m.cols()),
                // transpose of a recorded rotation
                Transform::Rotate(g) => apply_rotation_left(m, g.row, g.c, -g.s, 0),
            }
        }
        Ok(())
    }

    /// `M <- M * Q`.
    pub fn apply_q_right(&self, m: &mut DenseMatrix) -> Result<()> {
        if m.cols() != self.rows {
            return Err(Error::ShapeMismatch {
                left_rows: m.rows(),
                left_cols: m.cols(),
                right_rows: self.rows,
                right_cols: self.rows,
            });
        }
        for op in &self.ops {
            match op {
                Transform::Reflect(r) => apply_reflector_right(m, r),
                Transform::Rotate(g) => apply_rotation_right(m, g.row, g.c, -g.s),
            }
        }
        Ok(())
    }

    /// Explicit `m x m` matrix for `Q`; test and desk-scale use only.
    pub fn explicit(&self) -> DenseMatrix {
        let mut q = DenseMatrix::identity(self.rows);
        self.apply_q(&mut q).expect("identity has matching rows");
        q
    }
}

/// Builds the reflector annihilating `x[1..]`: overwrites `x[1..]` with the
/// tail of `v` and returns `(beta, tau)` with `H x = beta * e_1`.
/// `tau == 0` (identity) when the tail is already zero.
pub(crate) fn reflector_in_place(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let tail_norm_sq: f64 = x[1..].iter().map(|v| v * v).sum();
    if tail_norm_sq == 0.0 {
        return (alpha, 0.0);
    }
    let norm = (alpha * alpha + tail_norm_sq).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = beta;
    (beta, tau)
}

/// Applies `H = I - tau v v^T` to a column slice aligned with `v`.
#[inline]
pub(crate) fn apply_reflector_to_slice(v: &[f64], tau: f64, y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let w = tau * dot(v, y);
    axpy(-w, v, y);
}

/// Applies a reflector from the left to columns `c0..c1` of `m`.
pub(crate) fn apply_reflector_left(m: &mut DenseMatrix, r: &Reflector, c0: usize, c1: usize) {
    if r.tau == 0.0 {
        return;
    }
    let lo = r.offset;
    let hi = r.offset + r.v.len();
    for j in c0..c1 {
        apply_reflector_to_slice(&r.v, r.tau, &mut m.col_mut(j)[lo..hi]);
    }
}

/// Applies a reflector from the right: `M <- M * H`, touching columns
/// `offset..offset + v.len()` of `m`.
pub(crate) fn apply_reflector_right(m: &mut DenseMatrix, r: &Reflector) {
    if r.tau == 0.0 {
        return;
    }
    let rows = m.rows();
    let mut z = alloc::vec![0.0; rows];
    for (j, &vj) in r.v.iter().enumerate() {
        axpy(vj, m.col(r.offset + j), &mut z);
    }
    for (j, &vj) in r.v.iter().enumerate() {
        axpy(-r.tau * vj, &z, m.col_mut(r.offset + j));
    }
}

/// Applies the rotation `[c s; -s c]` to rows `(row, row+1)` of columns
/// `c0..` of `m`.
pub(crate) fn apply_rotation_left(m: &mut DenseMatrix, row: usize, c: f64, s: f64, c0: usize) {
    for j in c0..m.cols() {
        let col = m.col_mut(j);
        let a = col[row];
        let b = col[row + 1];
        col[row] = c * a + s * b;
        col[row + 1] = -s * a + c * b;
    }
}

/// Applies the rotation `[c s; -s c]` from the right to columns
/// `(row, row+1)` of `m`.
pub(crate) fn apply_rotation_right(m: &mut DenseMatrix, row: usize, c: f64, s: f64) {
    let (x, y) = m.col_pair_mut(row, row + 1);
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Unpivoted Householder QR of the first `k` columns of `a`.
///
/// Returns the orthogonal factor and the transformed matrix: upper
/// trapezoidal in its first `k` columns, with the remaining columns carrying
/// `Q^T` times the trailing block.
pub fn householder_qr(a: &DenseMatrix, k: usize) -> Result<(QFactor, DenseMatrix)> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k == 0 || k > m.min(n) {
        return Err(Error::RankOutOfRange { k, max: m.min(n) });
    }
    let mut w = a.clone();
    let mut q = QFactor::new(m);
    for step in 0..k {
        let refl = factor_column(&mut w, step, step);
        apply_reflector_left(&mut w, &refl, step + 1, n);
        q.push_reflector(refl);
    }
    Ok((q, w))
}

/// Factors column `col` of `w` below row `row0` into a reflector, stores
/// `beta` on the diagonal position, zeros the entries below it, and returns
/// the reflector (not yet applied to any other column).
pub(crate) fn factor_column(w: &mut DenseMatrix, row0: usize, col: usize) -> Reflector {
    let m = w.rows();
    let slice = &mut w.col_mut(col)[row0..m];
    let (_beta, tau) = reflector_in_place(slice);
    let mut v = alloc::vec![0.0; slice.len()];
    v[0] = 1.0;
    v[1..].copy_from_slice(&slice[1..]);
    for x in &mut slice[1..] {
        *x = 0.0;
    }
    Reflector {
        offset: row0,
        v,
        tau,
    }
}
