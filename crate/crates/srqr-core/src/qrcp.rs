//! QR with column pivoting, partial to a target rank.
//!
//! Pivots greedily on trailing column norms maintained by downdating, with
//! Householder reflections applied to the trailing matrix in panels: inside a
//! panel only the pivot row is kept current (enough to keep downdating), and
//! the rest of the trailing matrix receives the accumulated rank-`kb` update
//! once per panel. A norm whose downdate trips the cancellation guard ends
//! the panel early and is recomputed from fully updated data.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::householder::{factor_column, QFactor, Reflector};
use crate::matrix::{axpy, dot, DenseMatrix};
use crate::norms::ColumnNormTracker;
use crate::perm::Permutation;

/// Default panel width for the blocked trailing update.
pub const DEFAULT_PANEL: usize = 64;

/// Partial pivoted QR factorization `A * P = Q * R`.
///
/// `r` is the full working matrix: upper trapezoidal in the first `steps`
/// columns (zeros stored explicitly below the diagonal), while columns
/// `steps..` hold `Q^T` times the not-yet-factored block, so the trailing
/// residual lives in rows and columns `steps..`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: QFactor,
    pub r: DenseMatrix,
    pub perm: Permutation,
    pub steps: usize,
}

impl PivotedQr {
    /// `|R22|_F`: Frobenius norm of the residual block.
    pub fn residual_fro(&self) -> f64 {
        let mut acc = 0.0;
        for j in self.steps..self.r.cols() {
            acc += self.r.col_norm_sq_from(j, self.steps.min(self.r.rows()));
        }
        acc.sqrt()
    }

    /// `|R22|_F / |A|_F`, the relative error of the rank-`steps` truncated
    /// approximation. Degenerates to 1 when nothing was factored.
    pub fn relative_residual(&self, a: &DenseMatrix) -> f64 {
        let denom = a.frobenius_norm();
        if denom == 0.0 {
            return 0.0;
        }
        if self.steps == 0 {
            return 1.0;
        }
        self.residual_fro() / denom
    }

    /// Explicitly forms `Q * R`, which should reproduce `A * P`.
    pub fn reconstruction(&self) -> DenseMatrix {
        let mut qr = self.r.clone();
        self.q.apply_q(&mut qr).expect("factor rows match");
        qr
    }

    /// `|A*P - Q*R|_F / |A|_F`.
    pub fn reconstruction_error(&self, a: &DenseMatrix) -> f64 {
        let ap = self.perm.apply_to_cols(a).expect("permutation length");
        let diff = self.reconstruction().sub(&ap).expect("same shape");
        let denom = a.frobenius_norm();
        if denom == 0.0 {
            diff.frobenius_norm()
        } else {
            diff.frobenius_norm() / denom
        }
    }

    /// Leading `steps x steps` triangular block.
    pub fn r11(&self) -> DenseMatrix {
        self.r.submatrix(0, self.steps, 0, self.steps)
    }

    /// Leading `l` rows of `R` (the `(R11 R12)` strip).
    pub fn leading_rows(&self, l: usize) -> DenseMatrix {
        self.r.submatrix(0, l, 0, self.r.cols())
    }

    /// Residual block `R22` relative to a working rank `l <= steps`.
    pub fn trailing_block(&self, l: usize) -> DenseMatrix {
        self.r
            .submatrix(l.min(self.r.rows()), self.r.rows(), l, self.r.cols())
    }
}

/// QR with column pivoting to target rank `k`, default panel width.
pub fn qrcp(a: &DenseMatrix, k: usize) -> Result<PivotedQr> {
    qrcp_with_panel(a, k, DEFAULT_PANEL)
}

/// QR with column pivoting to target rank `k` with an explicit panel width.
pub fn qrcp_with_panel(a: &DenseMatrix, k: usize, panel: usize) -> Result<PivotedQr> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k == 0 || k > m.min(n) {
        return Err(Error::RankOutOfRange { k, max: m.min(n) });
    }
    let panel = panel.max(1);

    let mut w = a.clone();
    let mut q = QFactor::new(m);
    let mut perm = Permutation::identity(n);
    let mut tracker = ColumnNormTracker::from_matrix(a);

    let mut done = 0;
    while done < k {
        let width = panel.min(k - done);
        let kb = pivoted_panel(&mut w, &mut q, &mut perm, &mut tracker, done, width);
        done += kb;
        // flagged norms are only recomputable now that the block update ran
        let flagged: Vec<usize> = tracker.flagged_indices().filter(|&j| j >= done).collect();
        for j in flagged {
            tracker.recompute(j, w.col_norm_sq_from(j, done));
        }
    }

    Ok(PivotedQr {
        q,
        r: w,
        perm,
        steps: k,
    })
}

/// One pivoted panel starting at global step `rk0`, at most `width` columns.
/// Returns the number of columns factored (ends early when a norm downdate
/// trips the recompute guard).
fn pivoted_panel(
    w: &mut DenseMatrix,
    q: &mut QFactor,
    perm: &mut Permutation,
    tracker: &mut ColumnNormTracker,
    rk0: usize,
    width: usize,
) -> usize {
    let (m, n) = (w.rows(), w.cols());
    // f[(c - rk0, t)] accumulates tau_t * (trailing col c)^T v_t with the
    // staleness corrections folded in; the trailing block then needs only the
    // rank-kb update W -= V * F^T at panel end.
    let mut f = DenseMatrix::zeros(n - rk0, width);
    let mut panel: Vec<Reflector> = Vec::with_capacity(width);
    let mut kb = width;

    for j in 0..width {
        let s = rk0 + j;

        // pivot on tracked norms; ties resolve to the lowest index
        let pvt = tracker.argmax_from(s);
        if pvt != s {
            w.swap_cols(s, pvt);
            perm.swap(s, pvt);
            tracker.swap(s, pvt);
            f.swap_rows(s - rk0, pvt - rk0);
        }

        // apply this panel's pending updates to column s only
        for (t, refl) in panel.iter().enumerate() {
            let coef = f.get(j, t);
            if coef != 0.0 {
                let vtail = &refl.v[s - refl.offset..];
                axpy(-coef, vtail, &mut w.col_mut(s)[s..m]);
            }
        }

        let refl = factor_column(w, s, s);

        // F(:, j) = tau * (stale trailing)^T v_j, then corrected for the
        // pending updates: F(:, j) += F(:, 0..j) * (-tau * V^T v_j)
        if refl.tau != 0.0 {
            for c in s + 1..n {
                let val = refl.tau * dot(&w.col(c)[s..m], &refl.v);
                f.set(c - rk0, j, val);
            }
            let mut auxv = Vec::with_capacity(j);
            for refl_t in panel.iter() {
                let vt = &refl_t.v[s - refl_t.offset..];
                auxv.push(-refl.tau * dot(vt, &refl.v));
            }
            for r_idx in 0..n - rk0 {
                let mut acc = f.get(r_idx, j);
                for (t, &av) in auxv.iter().enumerate() {
                    acc += f.get(r_idx, t) * av;
                }
                f.set(r_idx, j, acc);
            }
        }

        // bring the pivot row current so norm downdates see true values
        for c in s + 1..n {
            let mut acc = w.get(s, c);
            for (t, refl_t) in panel.iter().enumerate() {
                acc -= refl_t.v[s - refl_t.offset] * f.get(c - rk0, t);
            }
            acc -= f.get(c - rk0, j); // v_j[0] == 1
            w.set(s, c, acc);
        }

        let mut tripped = false;
        for c in s + 1..n {
            tripped |= tracker.downdate(c, w.get(s, c));
        }

        panel.push(refl.clone());
        q.push_reflector(refl);

        if tripped {
            kb = j + 1;
            break;
        }
    }

    // deferred rank-kb update of the trailing block
    let row0 = rk0 + kb;
    for c in row0..n {
        for (t, refl) in panel.iter().enumerate().take(kb) {
            let coef = f.get(c - rk0, t);
            if coef != 0.0 {
                let vtail = &refl.v[row0 - refl.offset..];
                axpy(-coef, vtail, &mut w.col_mut(c)[row0..m]);
            }
        }
    }
    kb
}

/// Outcome of a pseudo-diagonal dominance scan.
#[derive(Debug, Clone)]
pub struct DominanceReport {
    pub holds: bool,
    /// Minimum of `|r_ii| / |R(i.., j)|` over all checked pairs.
    pub worst_ratio: f64,
    /// Pair attaining the worst ratio.
    pub witness: Option<(usize, usize)>,
}

/// Relative slack granted to the dominance inequalities in floating point.
pub const DOMINANCE_SLACK: f64 = 1e-10;

/// Checks `|r_ii| >= factor * sqrt(sum_{l>=i} r_lj^2)` for all
/// `i < steps, j > i`, up to [`DOMINANCE_SLACK`] relative slack.
///
/// Exact norm-greedy pivoting satisfies this with `factor = 1`; randomized
/// pivoting satisfies `factor = sqrt((1 - eps) / (1 + eps))` at the
/// advertised probability.
pub fn check_dominance(fact: &PivotedQr, factor: f64) -> DominanceReport {
    let r = &fact.r;
    let (m, n) = (r.rows(), r.cols());
    let k = fact.steps;
    let mut worst = f64::INFINITY;
    let mut witness = None;

    let mut suffix = alloc::vec![0.0_f64; k + 1];
    for j in 1..n {
        let top = k.min(j);
        // suffix[i] = sum of squares of column j from row i down; zeros below
        // the diagonal of factored columns are stored explicitly
        let mut acc = r.col_norm_sq_from(j, top.min(m));
        suffix[top] = acc;
        for i in (0..top).rev() {
            acc += r.get(i, j) * r.get(i, j);
            suffix[i] = acc;
        }
        for i in 0..top {
            let col_norm = suffix[i].sqrt();
            let diag = r.get(i, i).abs();
            let ratio = if col_norm == 0.0 {
                f64::INFINITY
            } else {
                diag / col_norm
            };
            if ratio < worst {
                worst = ratio;
                witness = Some((i, j));
            }
        }
    }

    DominanceReport {
        holds: worst >= factor * (1.0 - DOMINANCE_SLACK),
        worst_ratio: worst,
        witness,
    }
}
