//! Randomized QR with column pivoting.
//!
//! Pivots are chosen by running partial pivoted QR on the small sketch
//! `B = Omega * A` instead of on `A` itself: each round picks a block of `b`
//! pivots from `B`, swaps the corresponding columns of `A`, factors the panel
//! with an unpivoted QR, applies the block of reflectors to the trailing
//! matrix, and refreshes the sketch with the configured update rule.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::householder::{apply_reflector_left, factor_column, QFactor, Reflector};
use crate::matrix::DenseMatrix;
use crate::perm::Permutation;
use crate::qrcp::{qrcp_with_panel, PivotedQr};
use crate::sketch::{
    make_sketch_raw, update_formula1, update_formula2, FlopCounter, SketchConfig, SketchState,
    UpdateRule,
};

/// Trailing sketch columns whose largest norm falls below
/// `1e3 * eps * |B|_F` are treated as numerically zero and stop the
/// factorization at the achieved rank.
const ZERO_SKETCH_GUARD: f64 = 1e3 * f64::EPSILON;

/// Result of a randomized pivoted factorization.
#[derive(Debug, Clone)]
pub struct RqrcpResult {
    pub factorization: PivotedQr,
    /// Original column indices selected in each sketching round.
    pub block_pivots: Vec<Vec<usize>>,
    pub flops: FlopCounter,
    pub config: SketchConfig,
    /// Factored columns; smaller than the requested rank only when the
    /// trailing sketch became numerically zero.
    pub achieved_rank: usize,
}

impl RqrcpResult {
    /// `|A*P - Q*Rtrunc|_F / |A|_F`, computed from the residual block
    /// (`|R22|_F / |A|_F`, to which it is equal in exact arithmetic).
    pub fn truncated_residual(&self, a: &DenseMatrix) -> f64 {
        self.factorization.relative_residual(a)
    }
}

/// Working state of the randomized factorization, shared with the
/// spectrum-revealing driver which continues from it.
pub(crate) struct RqrcpState {
    pub w: DenseMatrix,
    pub q: QFactor,
    pub perm: Permutation,
    pub sketch: SketchState,
    pub achieved: usize,
    pub block_pivots: Vec<Vec<usize>>,
}

/// Randomized QRCP of `a` to target rank `k`.
pub fn rqrcp(a: &DenseMatrix, k: usize, cfg: &SketchConfig) -> Result<RqrcpResult> {
    let state = rqrcp_factor(a, k, cfg)?;
    Ok(RqrcpResult {
        factorization: PivotedQr {
            q: state.q,
            r: state.w,
            perm: state.perm,
            steps: state.achieved,
        },
        block_pivots: state.block_pivots,
        flops: state.sketch.flops,
        config: *cfg,
        achieved_rank: state.achieved,
    })
}

pub(crate) fn rqrcp_factor(a: &DenseMatrix, k: usize, cfg: &SketchConfig) -> Result<RqrcpState> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k == 0 || k > m.min(n) {
        return Err(Error::RankOutOfRange { k, max: m.min(n) });
    }

    let mut sketch = make_sketch_raw(a, cfg)?;
    let rows = sketch.omega.rows();
    let zero_tol = ZERO_SKETCH_GUARD * sketch.initial_fro();

    let mut w = a.clone();
    let mut q = QFactor::new(m);
    let mut perm = Permutation::identity(n);
    let mut block_pivots = Vec::new();

    let mut i = 0;
    while i < k {
        let b_eff = cfg.block_size.min(k - i);

        // degenerate trailing block: every candidate sketch norm is noise
        let max_trailing = (i..n)
            .map(|j| sketch.b_mat.col_norm_sq_from(j, 0))
            .fold(0.0_f64, f64::max)
            .sqrt();
        if max_trailing <= zero_tol {
            break;
        }

        // choose b pivots on the trailing sketch
        let bi = sketch.b_mat.submatrix(0, rows, i, n);
        let bf = qrcp_with_panel(&bi, b_eff, b_eff)?;
        let picked = bf.steps;
        sketch.flops.panel_pivoting += 4 * (rows * (n - i) * picked) as u64;

        w.reorder_trailing_cols(i, bf.perm.indices());
        perm.reorder_trailing(i, bf.perm.indices());
        block_pivots.push(perm.indices()[i..i + picked].to_vec());
        match sketch.rule {
            // the pivoted transform of B is the update's starting point
            UpdateRule::Formula1 => sketch.b_mat.set_submatrix(0, i, &bf.r),
            // Formula2 rebuilds the trailing sketch; only permute it
            UpdateRule::Formula2 => sketch.b_mat.reorder_trailing_cols(i, bf.perm.indices()),
        }

        // panel QR on the pivoted columns of A
        let mut panel: Vec<Reflector> = Vec::with_capacity(picked);
        for j in 0..picked {
            let refl = factor_column(&mut w, i + j, i + j);
            apply_reflector_left(&mut w, &refl, i + j + 1, i + picked);
            panel.push(refl);
        }
        sketch.flops.panel_qr += 4 * ((m - i) * picked * picked) as u64;

        // blocked application of the panel reflectors to the trailing matrix
        let t = n - i - picked;
        for refl in &panel {
            apply_reflector_left(&mut w, refl, i + picked, n);
        }
        sketch.flops.trailing_update += 4 * (picked * (m - i) * t) as u64;

        let mut collapsed = false;
        if t > 0 {
            let r11 = w.submatrix(i, i + picked, i, i + picked);
            let r12 = w.submatrix(i, i + picked, i + picked, n);
            let update = match sketch.rule {
                UpdateRule::Formula1 => update_formula1(&mut sketch, &r11, &r12),
                UpdateRule::Formula2 => {
                    let omega_bar1 = sketch.advance_carry(&panel)?;
                    update_formula2(&mut sketch, &omega_bar1, &r12)
                }
            };
            match update {
                Ok(()) => {}
                // a singular panel means the trailing block has collapsed;
                // report the rank reached instead of failing
                Err(Error::SingularPanel { .. }) => collapsed = true,
                Err(e) => return Err(e),
            }
        } else {
            sketch.processed = i + picked;
        }

        for refl in panel {
            q.push_reflector(refl);
        }
        i += picked;
        if collapsed {
            break;
        }
    }

    Ok(RqrcpState {
        w,
        q,
        perm,
        sketch,
        achieved: i,
        block_pivots,
    })
}
