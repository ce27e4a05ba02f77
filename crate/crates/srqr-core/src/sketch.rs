//! Gaussian sketching: the compressed matrix `B = Omega * A`, the two rules
//! that keep `B` a valid sketch of the trailing block as the factorization
//! advances, and oversampling / Johnson-Lindenstrauss diagnostics.

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::householder::{apply_reflector_right, Reflector};
use crate::matrix::DenseMatrix;
use crate::testmat::gaussian_matrix;
use crate::tri;

/// Which update rule keeps the sketch current after each factored block.
///
/// * `Formula1` triangular-solves the panel out of the leading sketch rows:
///   the top `b` rows of the trailing sketch become
///   `Rh12 - Rh11 * R11^{-1} * R12`. Cheapest; the default.
/// * `Formula2` carries `Omega * Q` forward and recomputes the trailing
///   sketch as `B2 - OmegaBar1 * R12`.
///
/// Both rules produce identical pivots; they differ only in cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum UpdateRule {
    Formula1,
    Formula2,
}

/// Sketch dimensions, seed, and update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SketchConfig {
    /// Block size `b`: pivots chosen per sketching round.
    pub block_size: usize,
    /// Oversampling `p`: extra sketch rows controlling failure probability.
    pub oversample: usize,
    pub seed: u64,
    pub update_rule: UpdateRule,
}

impl SketchConfig {
    pub fn new(block_size: usize, oversample: usize, seed: u64) -> Self {
        Self {
            block_size,
            oversample,
            seed,
            update_rule: UpdateRule::Formula1,
        }
    }

    pub fn with_rule(mut self, rule: UpdateRule) -> Self {
        self.update_rule = rule;
        self
    }

    /// Number of sketch rows, `b + p`.
    pub fn sketch_rows(&self) -> usize {
        self.block_size + self.oversample
    }

    /// A sketch must have at least one row and no more rows than `A`.
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::InvalidConfig("block size must be at least 1"));
        }
        if self.sketch_rows() > m {
            return Err(Error::InvalidConfig("sketch rows b + p exceed matrix rows"));
        }
        Ok(())
    }
}

impl Default for SketchConfig {
    fn default() -> Self {
        Self::new(64, 10, 0)
    }
}

/// Analytic operation tallies, incremented by the kernels with their
/// leading-order cost model (one multiply-add pair counted as two flops).
/// Hardware-independent; used to compare the update rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlopCounter {
    /// Forming `B = Omega * A`.
    pub sketch_compress: u64,
    /// Partial pivoting passes over the sketch.
    pub panel_pivoting: u64,
    /// Panel QR factorizations on the full-height matrix.
    pub panel_qr: u64,
    /// Blocked reflector application to the trailing matrix.
    pub trailing_update: u64,
    /// Keeping the sketch current (the update-rule cost being compared).
    pub sketch_update: u64,
}

impl FlopCounter {
    pub fn total(&self) -> u64 {
        self.sketch_compress
            + self.panel_pivoting
            + self.panel_qr
            + self.trailing_update
            + self.sketch_update
    }
}

/// Gaussian sketch `Omega` and compressed matrix `B` with update bookkeeping.
#[derive(Debug, Clone)]
pub struct SketchState {
    /// `(b + p) x m` i.i.d. standard normal matrix.
    pub omega: DenseMatrix,
    /// `(b + p) x n` compressed matrix; trailing columns stay a Gaussian
    /// sketch of the trailing block after every update.
    pub b_mat: DenseMatrix,
    /// Number of factored columns accounted for by updates so far.
    pub processed: usize,
    pub rule: UpdateRule,
    pub flops: FlopCounter,
    /// `Omega * Q`, maintained only under `Formula2`.
    omega_carry: Option<DenseMatrix>,
    /// `|B|_F` at construction; reference for the degenerate-rank exit.
    initial_fro: f64,
}

impl SketchState {
    pub fn initial_fro(&self) -> f64 {
        self.initial_fro
    }

    /// Squared trailing-column norms of the sketch scaled by `1 / (b + p)`,
    /// estimating the squared column norms of the trailing block of `A`.
    pub fn estimated_trailing_norms_sq(&self, from_col: usize) -> alloc::vec::Vec<f64> {
        let rows = self.b_mat.rows() as f64;
        (from_col..self.b_mat.cols())
            .map(|j| self.b_mat.col_norm_sq_from(j, 0) / rows)
            .collect()
    }

    /// Folds a factored panel into the carried `Omega * Q` (Formula2 only)
    /// and returns the `(b + p) x b` block aligned with the panel columns.
    pub fn advance_carry(&mut self, panel: &[Reflector]) -> Result<DenseMatrix> {
        let carry = self
            .omega_carry
            .as_mut()
            .ok_or(Error::InvalidConfig("carry is only maintained under Formula2"))?;
        for refl in panel {
            apply_reflector_right(carry, refl);
        }
        let (rows, m) = (carry.rows(), carry.cols());
        let (i, b_eff) = (self.processed, panel.len());
        self.flops.sketch_update += 2 * (b_eff * rows * (m - i)) as u64;
        Ok(carry.submatrix(0, rows, i, i + b_eff))
    }
}

/// Draws `Omega` from a ChaCha20 stream (column-major fill, ziggurat normal
/// variates) and compresses `A` into `B = Omega * A`.
pub fn make_sketch(a: &DenseMatrix, cfg: &SketchConfig) -> Result<SketchState> {
    cfg.validate(a.rows())?;
    make_sketch_raw(a, cfg)
}

/// Sketch construction without the row-count cap. The factorization driver
/// may oversample beyond the row count of `A`; that costs flops but keeps
/// the pivot-quality guarantees of large `p` intact.
pub(crate) fn make_sketch_raw(a: &DenseMatrix, cfg: &SketchConfig) -> Result<SketchState> {
    if cfg.block_size == 0 {
        return Err(Error::InvalidConfig("block size must be at least 1"));
    }
    let rows = cfg.sketch_rows();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let omega = gaussian_matrix(rows, a.rows(), &mut rng);
    let b_mat = omega.matmul(a)?;
    let mut flops = FlopCounter::default();
    flops.sketch_compress += 2 * (rows * a.rows() * a.cols()) as u64;
    let initial_fro = b_mat.frobenius_norm();
    let omega_carry = match cfg.update_rule {
        UpdateRule::Formula1 => None,
        UpdateRule::Formula2 => Some(omega.clone()),
    };
    Ok(SketchState {
        omega,
        b_mat,
        processed: 0,
        rule: cfg.update_rule,
        flops,
        omega_carry,
        initial_fro,
    })
}

/// First update rule: replaces the top `b` rows of the trailing sketch with
/// `Rh12 - Rh11 * R11^{-1} * R12`, leaving the remaining `p` rows untouched.
///
/// `r11` / `r12` are the panel blocks of the factored matrix; the sketch-side
/// blocks are read from `state.b_mat`, which must already hold the pivoted
/// QR transform of the current block (the pivoting pass writes it back).
pub fn update_formula1(
    state: &mut SketchState,
    r11: &DenseMatrix,
    r12: &DenseMatrix,
) -> Result<()> {
    let b_eff = r11.rows();
    if r11.cols() != b_eff || r12.rows() != b_eff {
        return Err(Error::ShapeMismatch {
            left_rows: r11.rows(),
            left_cols: r11.cols(),
            right_rows: r12.rows(),
            right_cols: r12.cols(),
        });
    }
    let i = state.processed;
    let n = state.b_mat.cols();
    let t = n - i - b_eff;
    if r12.cols() != t {
        return Err(Error::ShapeMismatch {
            left_rows: b_eff,
            left_cols: t,
            right_rows: r12.rows(),
            right_cols: r12.cols(),
        });
    }

    let tol = 1e3 * f64::EPSILON * r11.frobenius_norm();
    for d in 0..b_eff {
        if r11.get(d, d).abs() <= tol {
            return Err(Error::SingularPanel { column: i + d });
        }
    }

    let mut solved = alloc::vec![0.0_f64; b_eff];
    for c in 0..t {
        // w = R11^{-1} * R12(:, c)
        solved.copy_from_slice(r12.col(c));
        tri::solve_upper(r11, &mut solved)?;
        // top rows of trailing B(:, i+b+c) -= Rh11 * w
        let dst = i + b_eff + c;
        for (jj, &wj) in solved.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            // column jj of Rh11 lives in b_mat(0..=jj, i + jj)
            for r_idx in 0..=jj {
                let delta = state.b_mat.get(r_idx, i + jj) * wj;
                let cur = state.b_mat.get(r_idx, dst);
                state.b_mat.set(r_idx, dst, cur - delta);
            }
        }
    }
    state.flops.sketch_update += 2 * (b_eff * b_eff * t) as u64;
    state.processed = i + b_eff;
    Ok(())
}

/// Second update rule: overwrites the whole trailing sketch with
/// `B2 - OmegaBar1 * R12`, where `OmegaBar1` is the panel-aligned block of
/// the carried `Omega * Q` (see [`SketchState::advance_carry`]).
pub fn update_formula2(
    state: &mut SketchState,
    omega_bar1: &DenseMatrix,
    r12: &DenseMatrix,
) -> Result<()> {
    let rows = state.b_mat.rows();
    let b_eff = omega_bar1.cols();
    if omega_bar1.rows() != rows || r12.rows() != b_eff {
        return Err(Error::ShapeMismatch {
            left_rows: omega_bar1.rows(),
            left_cols: omega_bar1.cols(),
            right_rows: r12.rows(),
            right_cols: r12.cols(),
        });
    }
    let i = state.processed;
    let n = state.b_mat.cols();
    let t = n - i - b_eff;
    if r12.cols() != t {
        return Err(Error::ShapeMismatch {
            left_rows: rows,
            left_cols: t,
            right_rows: r12.rows(),
            right_cols: r12.cols(),
        });
    }

    for c in 0..t {
        let rcol = r12.col(c);
        let dst = i + b_eff + c;
        for r_idx in 0..rows {
            let mut acc = state.b_mat.get(r_idx, dst);
            for (jj, &rv) in rcol.iter().enumerate() {
                acc -= omega_bar1.get(r_idx, jj) * rv;
            }
            state.b_mat.set(r_idx, dst, acc);
        }
    }
    state.flops.sketch_update += 2 * (rows * b_eff * t) as u64;
    state.processed = i + b_eff;
    Ok(())
}

/// Smallest oversampling `p` for which randomized pivoting is pseudo-diagonal
/// dominant with failure probability at most `delta` at distortion `eps`:
/// `ceil(4 / (eps^2 - eps^3) * ln(2 n k / delta)) - 1` (natural log).
pub fn min_oversampling(n: usize, k: usize, eps: f64, delta: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig("eps and delta must lie in (0, 1)"));
    }
    if n == 0 || k == 0 {
        return Err(Error::InvalidConfig("n and k must be positive"));
    }
    let arg = 2.0 * (n as f64) * (k as f64) / delta;
    let p = (4.0 / (eps * eps - eps * eps * eps) * arg.ln()).ceil() - 1.0;
    Ok(if p > 0.0 { p as usize } else { 0 })
}

/// Whether `x` satisfies the Johnson-Lindenstrauss condition under `omega`:
/// `(1-eps) |x|^2 <= |omega x|^2 / r <= (1+eps) |x|^2` with `r` sketch rows.
pub fn jl_check(x: &[f64], omega: &DenseMatrix, eps: f64) -> Result<bool> {
    if x.is_empty() {
        return Ok(true);
    }
    if omega.cols() != x.len() {
        return Err(Error::ShapeMismatch {
            left_rows: omega.rows(),
            left_cols: omega.cols(),
            right_rows: x.len(),
            right_cols: 1,
        });
    }
    let r = omega.rows();
    let x_sq: f64 = x.iter().map(|v| v * v).sum();
    let mut y = alloc::vec![0.0_f64; r];
    for (j, &xj) in x.iter().enumerate() {
        crate::matrix::axpy(xj, omega.col(j), &mut y);
    }
    let y_sq: f64 = y.iter().map(|v| v * v).sum::<f64>() / r as f64;
    Ok((1.0 - eps) * x_sq <= y_sq && y_sq <= (1.0 + eps) * x_sq)
}

/// Failure probability bound of the Johnson-Lindenstrauss condition at
/// distortion `eps` with `r` sketch rows: `2 exp(-(eps^2 - eps^3) r / 4)`.
pub fn jl_failure_bound(r: usize, eps: f64) -> f64 {
    2.0 * (-(eps * eps - eps * eps * eps) * r as f64 / 4.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_matrix_sketches_to_zero() {
        let a = DenseMatrix::zeros(10, 6);
        let s = make_sketch(&a, &SketchConfig::new(2, 3, 7)).unwrap();
        assert_eq!(s.b_mat, DenseMatrix::zeros(5, 6));
    }

    #[test]
    fn identity_sketches_to_omega() {
        let a = DenseMatrix::identity(9);
        let s = make_sketch(&a, &SketchConfig::new(3, 2, 42)).unwrap();
        assert_eq!(s.b_mat, s.omega);
    }

    #[test]
    fn rejects_oversized_sketch() {
        let a = DenseMatrix::identity(4);
        assert!(matches!(
            make_sketch(&a, &SketchConfig::new(3, 2, 0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let a = gaussian_matrix(12, 8, &mut ChaCha20Rng::seed_from_u64(5));
        let s1 = make_sketch(&a, &SketchConfig::new(3, 4, 11)).unwrap();
        let s2 = make_sketch(&a, &SketchConfig::new(3, 4, 11)).unwrap();
        assert_eq!(s1.omega, s2.omega);
        assert_eq!(s1.b_mat, s2.b_mat);
    }

    #[test]
    fn formula1_scalar_case() {
        // b = 1: Rh12 = 4, Rh11 = 2, R11 = 2, R12 = 3 -> 4 - 2*(3/2) = 1
        let a = DenseMatrix::from_rows(&[&[2.0, 4.0]]).unwrap();
        let mut state = make_sketch(&DenseMatrix::identity(1), &SketchConfig::new(1, 0, 0))
            .unwrap();
        state.b_mat = a;
        let r11 = DenseMatrix::from_rows(&[&[2.0]]).unwrap();
        let r12 = DenseMatrix::from_rows(&[&[3.0]]).unwrap();
        update_formula1(&mut state, &r11, &r12).unwrap();
        assert!((state.b_mat.get(0, 1) - 1.0).abs() <= 1e-15);
        assert_eq!(state.processed, 1);
    }

    #[test]
    fn formula1_zero_r12_leaves_sketch_alone() {
        let a = gaussian_matrix(8, 5, &mut ChaCha20Rng::seed_from_u64(3));
        let mut s = make_sketch(&a, &SketchConfig::new(2, 2, 9)).unwrap();
        let before = s.b_mat.clone();
        let r11 = DenseMatrix::from_rows(&[&[1.5, 0.3], &[0.0, -2.0]]).unwrap();
        let r12 = DenseMatrix::zeros(2, 3);
        update_formula1(&mut s, &r11, &r12).unwrap();
        assert_eq!(s.b_mat, before);
    }

    #[test]
    fn formula1_rejects_singular_panel() {
        let a = gaussian_matrix(8, 5, &mut ChaCha20Rng::seed_from_u64(3));
        let mut s = make_sketch(&a, &SketchConfig::new(2, 2, 9)).unwrap();
        let r11 = DenseMatrix::from_rows(&[&[1.5, 0.3], &[0.0, 0.0]]).unwrap();
        let r12 = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            update_formula1(&mut s, &r11, &r12),
            Err(Error::SingularPanel { column: 1 })
        ));
    }

    #[test]
    fn formula2_zero_r12_leaves_sketch_alone() {
        let a = gaussian_matrix(8, 5, &mut ChaCha20Rng::seed_from_u64(4));
        let cfg = SketchConfig::new(2, 2, 13).with_rule(UpdateRule::Formula2);
        let mut s = make_sketch(&a, &cfg).unwrap();
        let before = s.b_mat.clone();
        let omega_bar1 = DenseMatrix::zeros(4, 2);
        let r12 = DenseMatrix::zeros(2, 3);
        update_formula2(&mut s, &omega_bar1, &r12).unwrap();
        assert_eq!(s.b_mat, before);
    }

    #[test]
    fn oversampling_formula_published_value() {
        assert_eq!(min_oversampling(1000, 200, 0.5, 0.05).unwrap(), 508);
    }

    #[test]
    fn oversampling_monotone_in_delta() {
        let mut last = usize::MAX;
        for delta in [0.01, 0.05, 0.1, 0.5, 0.9] {
            let p = min_oversampling(1000, 200, 0.5, delta).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn oversampling_matches_direct_evaluation() {
        // independent evaluation of the ceiling expression
        for (n, k, eps, delta) in [
            (1usize, 1usize, 0.5, 0.5),
            (10, 4, 0.3, 0.1),
            (500, 80, 0.7, 0.02),
            (1000, 200, 0.5, 0.05),
        ] {
            let direct = {
                let v = 4.0 / (eps * eps * (1.0 - eps))
                    * (2.0 * n as f64 * k as f64 / delta).ln();
                (v.ceil() as isize - 1).max(0) as usize
            };
            assert_eq!(min_oversampling(n, k, eps, delta).unwrap(), direct);
        }
        assert!(min_oversampling(10, 2, 1.0, 0.5).is_err());
        assert!(min_oversampling(10, 2, 0.5, 0.0).is_err());
    }

    #[test]
    fn jl_check_edge_cases() {
        let omega = DenseMatrix::identity(4);
        assert!(jl_check(&[], &omega, 0.1).unwrap());
        // omega = sqrt(r) * I satisfies the condition for any eps
        let mut scaled = DenseMatrix::identity(4);
        scaled.scale(2.0);
        assert!(jl_check(&[1.0, -2.0, 0.5, 3.0], &scaled, 1e-9).unwrap());
        assert!(jl_check(&[1.0], &omega, 0.1).is_err());
    }

    #[test]
    fn jl_concentration_beats_bound() {
        // column-norm concentration of the sketch at eps = 0.5, r = 32 rows
        let eps = 0.5;
        let rows = 32;
        let dim = 200;
        let trials = 1000;
        let bound = 1.0 - jl_failure_bound(rows, eps);
        let mut hits = 0;
        for seed in 0..trials {
            let mut rng = ChaCha20Rng::seed_from_u64(10_000 + seed);
            let x: alloc::vec::Vec<f64> = (0..dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let omega = gaussian_matrix(rows, dim, &mut rng);
            if jl_check(&x, &omega, eps).unwrap() {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!(
            freq >= bound,
            "empirical {freq:.4} below Johnson-Lindenstrauss bound {bound:.4}"
        );
    }
}
