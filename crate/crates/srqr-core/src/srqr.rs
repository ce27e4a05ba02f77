//! Spectrum-revealing QR.
//!
//! Runs the randomized pivoted factorization to a working rank `l`, takes one
//! extra pivot step to expose the `(l+1)`-st diagonal `alpha`, and then
//! certifies pivot quality through the pair
//!
//! * `g1 = |R22|_{1,2} / alpha` (how far the last pivot is from the best
//!   trailing column), and
//! * `g2 = alpha * |Rhat^{-T}|_{1,2}` (how close the leading triangle is to
//!   singular relative to `alpha`),
//!
//! where `Rhat` is the leading `(l+1) x (l+1)` triangle. `g2` is estimated
//! cheaply by sketching `Rhat^{-T}` with a few Gaussian rows. While the
//! estimate exceeds the user tolerance `g`, the offending column is rotated
//! out to the boundary (round-robin plus Givens restoration), the trailing
//! block is re-pivoted, and the estimate is refreshed. Certification makes
//! `|R22|_2 = O(sigma_{l+1}(A))`, which is what turns the leading `l` rows of
//! `R` into a provably good rank-`k` approximation.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::givens::givens_restore;
use crate::householder::{apply_reflector_left, factor_column, QFactor};
use crate::matrix::DenseMatrix;
use crate::perm::Permutation;
use crate::qrcp::PivotedQr;
use crate::rqrcp::rqrcp_factor;
use crate::sketch::SketchConfig;
use crate::svd::svd_oracle;
use crate::tri;

/// Stream separator for the estimator RNG so it never overlaps the sketch.
const ESTIMATOR_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SrqrConfig {
    /// Approximation rank `k` of the final truncation.
    pub target_rank: usize,
    /// Working rank `l >= k` of the factorization.
    pub working_rank: usize,
    /// Tolerance `g > 1` below which the estimated `g2` certifies the
    /// factorization.
    pub g_tolerance: f64,
    /// Gaussian rows `d` used by the `g2` estimator.
    pub estimator_rows: usize,
    pub sketch: SketchConfig,
    /// Hard cap on extra swaps; defaults to `3 * l`.
    pub swap_cap: Option<usize>,
    /// Compute the rank-`k` SVD truncation of the leading rows (desk scale).
    pub compute_truncation: bool,
}

impl SrqrConfig {
    pub fn new(target_rank: usize, working_rank: usize) -> Self {
        Self {
            target_rank,
            working_rank,
            g_tolerance: 5.0,
            estimator_rows: 8,
            sketch: SketchConfig::default(),
            swap_cap: None,
            compute_truncation: true,
        }
    }

    pub fn swap_cap(&self) -> usize {
        self.swap_cap.unwrap_or(3 * self.working_rank)
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        let minmn = m.min(n);
        if self.target_rank == 0 || self.target_rank > self.working_rank {
            return Err(Error::InvalidConfig("need 1 <= k <= l"));
        }
        if self.working_rank > minmn {
            return Err(Error::RankOutOfRange {
                k: self.working_rank,
                max: minmn,
            });
        }
        if !(self.g_tolerance > 1.0) {
            return Err(Error::InvalidConfig("tolerance g must exceed 1"));
        }
        if self.estimator_rows == 0 {
            return Err(Error::InvalidConfig("estimator needs at least one row"));
        }
        Ok(())
    }
}

/// Certification facts gathered while computing the factorization.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SrqrDiagnostics {
    /// `|R22|_{1,2} / alpha`, exact.
    pub g1: f64,
    /// Last randomized estimate of `g2`.
    pub g2_estimate: f64,
    /// Exact `g2`, filled in by bound verification.
    pub g2_exact: Option<f64>,
    /// Magnitude of the `(l+1)`-st diagonal after the extra pivot step.
    pub alpha: f64,
    /// Extra swaps performed by the certification loop.
    pub swaps: usize,
    /// Whether the loop exited with `g2_estimate <= g`.
    pub certified: bool,
    /// True when there was no trailing matrix to certify against
    /// (`l = min(m, n)` or the factorization stopped early); `g1` and the
    /// `tau` family are undefined in that case.
    pub vacuous: bool,
    /// `|R22|_2 / sigma_{l+1}(A)`; filled in by bound verification.
    pub tau: Option<f64>,
    /// Bound-side companion of `tau` via the leading rows.
    pub tau_hat: Option<f64>,
    /// `tau_hat * sigma_l(Rtilde) / sigma_k(Rtilde)`.
    pub tau_bar: Option<f64>,
    /// Columns actually factored (`l + 1` unless degenerate).
    pub achieved_rank: usize,
}

/// The leading-rows approximation extracted from a factorization.
#[derive(Debug, Clone)]
pub struct TruncatedApproximation {
    pub q: QFactor,
    /// `(R11 R12)`: the leading `l` rows of `R`.
    pub r_tilde: DenseMatrix,
    /// Rank-`k` SVD truncation of `r_tilde`; present when truncation was
    /// requested in the config.
    pub r_tilde_k: Option<DenseMatrix>,
    pub perm: Permutation,
}

#[derive(Debug, Clone)]
pub struct SrqrOutput {
    pub factorization: PivotedQr,
    pub diagnostics: SrqrDiagnostics,
    pub truncated: TruncatedApproximation,
    pub config: SrqrConfig,
}

/// `|R22|_{1,2} / |alpha|`. Zero trailing block gives 0; a vanished pivot
/// against a live trailing block gives infinity (uncertifiable).
pub fn compute_g1(r22: &DenseMatrix, alpha: f64) -> f64 {
    let max_col = r22.max_col_norm();
    if max_col == 0.0 {
        0.0
    } else if alpha == 0.0 {
        f64::INFINITY
    } else {
        max_col / alpha.abs()
    }
}

/// Randomized estimate `(|alpha| / sqrt(d)) * |Omega * Rhat^{-T}|_{1,2}` with
/// a fresh `d x (l+1)` Gaussian sketch drawn from `seed`.
pub fn estimate_g2(r_hat: &DenseMatrix, alpha: f64, d: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (g2, _) = g2_estimate_pass(r_hat, alpha, d, &mut rng)?;
    Ok(g2)
}

/// Exact `g2 = |alpha| * |Rhat^{-T}|_{1,2}` by triangular solves.
pub fn exact_g2(r_hat: &DenseMatrix, alpha: f64) -> Result<f64> {
    Ok(alpha.abs() * tri::inverse_transpose_max_col_norm(r_hat)?)
}

/// One estimator pass; returns the estimate and the squared column norms of
/// `Omega * Rhat^{-T}` (the argmax of which picks the swap column).
fn g2_estimate_pass(
    r_hat: &DenseMatrix,
    alpha: f64,
    d: usize,
    rng: &mut ChaCha20Rng,
) -> Result<(f64, Vec<f64>)> {
    let q = r_hat.rows();
    let mut col_sq = alloc::vec![0.0_f64; q];
    let mut row = alloc::vec![0.0_f64; q];
    for _ in 0..d {
        for x in row.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        // row of Omega * Rhat^{-T} solves Rhat y = omega_row
        tri::solve_upper(r_hat, &mut row)?;
        for (acc, y) in col_sq.iter_mut().zip(&row) {
            *acc += y * y;
        }
    }
    let max_sq = col_sq.iter().fold(0.0_f64, |a, &b| a.max(b));
    let g2 = alpha.abs() / (d as f64).sqrt() * max_sq.sqrt();
    Ok((g2, col_sq))
}

/// In-progress spectrum-revealing factorization, exposed so the swap loop
/// can be driven and inspected step by step.
pub struct SrqrState {
    w: DenseMatrix,
    q: QFactor,
    perm: Permutation,
    cfg: SrqrConfig,
    /// Estimated squared trailing column norms for columns `l..n`
    /// (index 0 is column `l`).
    est_norms: Vec<f64>,
    alpha: f64,
    g2_est: f64,
    /// Squared column norms of the last `Omega * Rhat^{-T}`.
    x_col_sq: Vec<f64>,
    swaps: usize,
    rng: ChaCha20Rng,
    vacuous: bool,
    achieved: usize,
}

impl SrqrState {
    /// Factors to the working rank and performs the extra pivot step plus the
    /// first `g2` estimate.
    pub fn new(a: &DenseMatrix, cfg: SrqrConfig) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m == 0 || n == 0 {
            return Err(Error::EmptyMatrix);
        }
        cfg.validate(m, n)?;
        let l = cfg.working_rank;

        let state = rqrcp_factor(a, l, &cfg.sketch)?;
        let rng = ChaCha20Rng::seed_from_u64(cfg.sketch.seed ^ ESTIMATOR_SEED_SALT);

        // no trailing matrix to certify against: vacuously certified
        if state.achieved < l || l == m.min(n) {
            return Ok(Self {
                w: state.w,
                q: state.q,
                perm: state.perm,
                cfg,
                est_norms: Vec::new(),
                alpha: 0.0,
                g2_est: 0.0,
                x_col_sq: Vec::new(),
                swaps: 0,
                rng,
                vacuous: true,
                achieved: state.achieved,
            });
        }

        let mut this = Self {
            est_norms: state.sketch.estimated_trailing_norms_sq(l),
            w: state.w,
            q: state.q,
            perm: state.perm,
            cfg,
            alpha: 0.0,
            g2_est: 0.0,
            x_col_sq: Vec::new(),
            swaps: 0,
            rng,
            vacuous: false,
            achieved: l + 1,
        };
        this.pivot_and_factor_boundary();
        this.refresh_estimate()?;
        Ok(this)
    }

    pub fn g2_estimate(&self) -> f64 {
        self.g2_est
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn swaps(&self) -> usize {
        self.swaps
    }

    pub fn certified(&self) -> bool {
        self.vacuous || self.g2_est <= self.cfg.g_tolerance
    }

    /// Snapshot of the factorization as it stands (for per-swap inspection).
    pub fn current_factorization(&self) -> PivotedQr {
        PivotedQr {
            q: self.q.clone(),
            r: self.w.clone(),
            perm: self.perm.clone(),
            steps: self.achieved,
        }
    }

    /// Picks the trailing column with the largest estimated norm, swaps it to
    /// the boundary position `l`, factors it with one reflector, and
    /// downdates the estimates. Sets `alpha`.
    fn pivot_and_factor_boundary(&mut self) {
        let l = self.cfg.working_rank;
        let n = self.w.cols();
        let mut best = 0;
        for (idx, &v) in self.est_norms.iter().enumerate() {
            if v > self.est_norms[best] {
                best = idx;
            }
        }
        if best != 0 {
            self.w.swap_cols(l, l + best);
            self.perm.swap(l, l + best);
            self.est_norms.swap(0, best);
        }
        let refl = factor_column(&mut self.w, l, l);
        apply_reflector_left(&mut self.w, &refl, l + 1, n);
        self.q.push_reflector(refl);
        self.alpha = self.w.get(l, l).abs();
        for j in l + 1..n {
            let x = self.w.get(l, j);
            let v = &mut self.est_norms[j - l];
            *v = (*v - x * x).max(0.0);
        }
    }

    fn refresh_estimate(&mut self) -> Result<()> {
        let l = self.cfg.working_rank;
        let r_hat = self.w.submatrix(0, l + 1, 0, l + 1);
        let (g2, x_col_sq) =
            g2_estimate_pass(&r_hat, self.alpha, self.cfg.estimator_rows, &mut self.rng)?;
        self.g2_est = g2;
        self.x_col_sq = x_col_sq;
        Ok(())
    }

    /// One guarded swap: rotates the column on which `Rhat^{-T}` is largest
    /// out to the boundary, restores triangular form, re-pivots the trailing
    /// block, and refreshes `alpha` and the `g2` estimate.
    ///
    /// No-op on an already certified (or vacuous) state.
    pub fn swap_step(&mut self) -> Result<()> {
        if self.certified() {
            return Ok(());
        }
        let l = self.cfg.working_rank;
        let n = self.w.cols();

        let mut worst = 0;
        for (idx, &v) in self.x_col_sq.iter().enumerate() {
            if v > self.x_col_sq[worst] {
                worst = idx;
            }
        }

        if worst < l {
            // round-robin rotation of columns worst..=l, then restore
            self.w.rotate_cols_left(worst, l);
            self.perm.rotate_left(worst, l);
            for rot in givens_restore(&mut self.w, worst, l)? {
                self.q.push_rotation(rot);
            }
        }
        // the boundary column re-enters the trailing set; row l re-enters
        // the trailing norms
        let dl = self.w.get(l, l);
        self.est_norms[0] = dl * dl;
        for j in l + 1..n {
            let x = self.w.get(l, j);
            self.est_norms[j - l] += x * x;
        }

        self.pivot_and_factor_boundary();
        self.refresh_estimate()?;
        self.swaps += 1;
        Ok(())
    }

    /// Runs swap steps until certified or the swap cap is reached.
    pub fn run_to_certification(&mut self) -> Result<()> {
        let cap = self.cfg.swap_cap();
        while !self.certified() && self.swaps < cap {
            self.swap_step()?;
        }
        Ok(())
    }

    /// Packages the factorization, diagnostics, and truncated approximation.
    pub fn finish(self) -> Result<SrqrOutput> {
        let l = self.cfg.working_rank.min(self.achieved);
        let m = self.w.rows();
        let n = self.w.cols();

        let g1 = if self.vacuous {
            0.0
        } else {
            compute_g1(&self.w.submatrix(l, m, l, n), self.alpha)
        };

        let r_tilde = self.w.submatrix(0, l, 0, n);
        let r_tilde_k = if self.cfg.compute_truncation {
            Some(svd_oracle(&r_tilde)?.truncate(self.cfg.target_rank))
        } else {
            None
        };

        let diagnostics = SrqrDiagnostics {
            g1,
            g2_estimate: self.g2_est,
            g2_exact: None,
            alpha: self.alpha,
            swaps: self.swaps,
            certified: self.certified(),
            vacuous: self.vacuous,
            tau: None,
            tau_hat: None,
            tau_bar: None,
            achieved_rank: self.achieved,
        };

        Ok(SrqrOutput {
            truncated: TruncatedApproximation {
                q: self.q.clone(),
                r_tilde,
                r_tilde_k,
                perm: self.perm.clone(),
            },
            factorization: PivotedQr {
                q: self.q,
                r: self.w,
                perm: self.perm,
                steps: self.achieved,
            },
            diagnostics,
            config: self.cfg,
        })
    }
}

/// Spectrum-revealing QR of `a`: factor to the working rank, certify, and
/// swap until the estimated `g2` falls below the tolerance (or the swap cap
/// is hit, in which case the output is marked uncertified).
pub fn srqr(a: &DenseMatrix, cfg: SrqrConfig) -> Result<SrqrOutput> {
    let mut state = SrqrState::new(a, cfg)?;
    state.run_to_certification()?;
    state.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testmat::{decaying_spectrum, gaussian_matrix, geometric_sigmas, kahan, KahanSpec};

    fn fast_decay_config(k: usize, l: usize, seed: u64) -> SrqrConfig {
        let mut cfg = SrqrConfig::new(k, l);
        cfg.sketch = SketchConfig::new(16, 10, seed);
        cfg
    }

    #[test]
    fn fast_decay_needs_no_swaps() {
        let a = decaying_spectrum(100, 100, &geometric_sigmas(100, 0.5), 3).unwrap();
        let out = srqr(&a, fast_decay_config(20, 20, 9)).unwrap();
        assert!(out.diagnostics.certified);
        assert_eq!(out.diagnostics.swaps, 0);
        assert!(!out.diagnostics.vacuous);
        assert!(out.diagnostics.g2_estimate <= 5.0);
    }

    #[test]
    fn g1_is_one_after_exact_pivot_and_zero_on_empty_block() {
        // alpha equal to the largest trailing column norm gives exactly 1
        let r22 = DenseMatrix::from_rows(&[&[3.0, 1.0], &[0.0, 2.0]]).unwrap();
        assert!((compute_g1(&r22, 3.0) - 1.0).abs() <= 1e-15);
        assert_eq!(compute_g1(&DenseMatrix::zeros(2, 2), 0.5), 0.0);
        assert_eq!(compute_g1(&r22, 0.0), f64::INFINITY);
    }

    #[test]
    fn g2_identity_is_exactly_one() {
        let r_hat = DenseMatrix::identity(6);
        assert!((exact_g2(&r_hat, 1.0).unwrap() - 1.0).abs() <= 1e-15);
        // the estimator concentrates near 1
        let est = estimate_g2(&r_hat, 1.0, 8, 4).unwrap();
        assert!(est > 0.2 && est < 3.0, "estimate {est}");
    }

    #[test]
    fn g2_estimator_tracks_graded_exact_value() {
        // Rhat = diag(1, delta) with alpha = delta: exact g2 = 1
        let delta = 1e-6;
        let r_hat = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, delta]]).unwrap();
        let exact = exact_g2(&r_hat, delta).unwrap();
        assert!((exact - 1.0).abs() <= 1e-12);
        let mut within = 0;
        for seed in 0..100 {
            let est = estimate_g2(&r_hat, delta, 8, seed).unwrap();
            if est >= exact / 3.0 && est <= exact * 3.0 {
                within += 1;
            }
        }
        assert!(within >= 95, "estimator within x3 in {within}/100 trials");
    }

    #[test]
    fn kahan_qrcp_leaves_g2_large() {
        // plain norm-greedy pivoting on the Kahan matrix hides the rank; the
        // exact g2 on its leading triangle is far above any sane tolerance
        let n = 96;
        let a = kahan(&KahanSpec::with_default_s(n, 0.285)).unwrap();
        let f = crate::qrcp::qrcp(&a, n - 1).unwrap();
        let r_hat = f.r.submatrix(0, n, 0, n);
        let alpha = f.r.get(n - 1, n - 1).abs();
        let g2 = exact_g2(&r_hat, alpha).unwrap();
        assert!(g2 > 1e3, "exact g2 = {g2:.3e}");
    }

    #[test]
    fn kahan_certification_repairs_the_residual() {
        let n = 96;
        let a = kahan(&KahanSpec::with_default_s(n, 0.285)).unwrap();
        let mut cfg = SrqrConfig::new(n - 1, n - 1);
        cfg.sketch = SketchConfig::new(64, 10, 1);
        cfg.compute_truncation = false;
        let out = srqr(&a, cfg).unwrap();
        assert!(out.diagnostics.certified);
        let res = out.factorization.relative_residual(&a);
        assert!(res <= 1e-10, "residual {res:.3e}");
        // the paper-scale behavior: only a handful of swaps are needed
        assert!(out.diagnostics.swaps <= 5, "swaps {}", out.diagnostics.swaps);
        // while plain pivoting is stuck three orders higher
        let plain = crate::qrcp::qrcp(&a, n - 1).unwrap().relative_residual(&a);
        assert!(plain >= 1e-6);
    }

    #[test]
    fn reconstruction_survives_every_swap() {
        let n = 96;
        let a = kahan(&KahanSpec::with_default_s(n, 0.285)).unwrap();
        let mut cfg = SrqrConfig::new(n - 1, n - 1);
        cfg.sketch = SketchConfig::new(64, 10, 1);
        cfg.compute_truncation = false;
        let mut state = SrqrState::new(&a, cfg).unwrap();
        let mut guard = 0;
        loop {
            let f = state.current_factorization();
            assert!(
                f.reconstruction_error(&a) <= 1e-10,
                "reconstruction broke after {} swaps",
                state.swaps()
            );
            if state.certified() || guard > 20 {
                break;
            }
            state.swap_step().unwrap();
            guard += 1;
        }
        assert!(state.certified());
    }

    #[test]
    fn self_swap_degenerates_to_re_pivoting() {
        // force the degenerate branch by driving swap_step on a state whose
        // worst column is already the boundary: a diagonal matrix with the
        // deficiency in the last position
        let a = decaying_spectrum(30, 30, &geometric_sigmas(30, 0.7), 5).unwrap();
        let mut cfg = SrqrConfig::new(10, 10);
        cfg.sketch = SketchConfig::new(5, 5, 2);
        let mut state = SrqrState::new(&a, cfg).unwrap();
        // drive one artificial swap regardless of certification
        state.x_col_sq = alloc::vec![0.0; 11];
        state.x_col_sq[10] = 1.0;
        state.g2_est = f64::INFINITY;
        let before = state.perm.indices()[..10].to_vec();
        state.swap_step().unwrap();
        // leading block pivots unchanged; only the boundary was re-pivoted
        assert_eq!(&state.perm.indices()[..10], &before[..]);
        assert_eq!(state.swaps(), 1);
        let f = state.current_factorization();
        assert!(f.reconstruction_error(&a) <= 1e-12);
    }

    #[test]
    fn vacuous_when_working_rank_is_full() {
        let a = gaussian_matrix(12, 12, &mut ChaCha20Rng::seed_from_u64(8));
        let mut cfg = SrqrConfig::new(12, 12);
        cfg.sketch = SketchConfig::new(4, 4, 3);
        let out = srqr(&a, cfg).unwrap();
        assert!(out.diagnostics.vacuous);
        assert!(out.diagnostics.certified);
        assert!(out.factorization.reconstruction_error(&a) <= 1e-12);
    }

    #[test]
    fn truncated_approximation_has_rank_k_spectrum() {
        let a = decaying_spectrum(40, 40, &geometric_sigmas(40, 0.6), 11).unwrap();
        let out = srqr(&a, fast_decay_config(5, 12, 21)).unwrap();
        let rt = &out.truncated.r_tilde;
        assert_eq!(rt.rows(), 12);
        let rtk = out.truncated.r_tilde_k.as_ref().unwrap();
        let full = svd_oracle(rt).unwrap();
        let trunc = svd_oracle(rtk).unwrap();
        for j in 0..5 {
            assert!((full.sigma[j] - trunc.sigma[j]).abs() <= 1e-10 * full.sigma[0]);
        }
        for j in 5..12 {
            assert!(trunc.sigma[j] <= 1e-10 * full.sigma[0]);
        }
    }

    #[test]
    fn certification_soundness_estimate_vs_exact() {
        // certified runs must have exact g2 within the estimator slack kappa=4
        for seed in 0..20 {
            let a = decaying_spectrum(60, 50, &geometric_sigmas(50, 0.8), 600 + seed).unwrap();
            let mut cfg = SrqrConfig::new(10, 15);
            cfg.sketch = SketchConfig::new(8, 8, seed);
            cfg.compute_truncation = false;
            let out = srqr(&a, cfg).unwrap();
            if !out.diagnostics.certified || out.diagnostics.vacuous {
                continue;
            }
            let l = out.config.working_rank;
            let r_hat = out.factorization.r.submatrix(0, l + 1, 0, l + 1);
            let exact = exact_g2(&r_hat, out.diagnostics.alpha).unwrap();
            assert!(
                exact <= 4.0 * out.config.g_tolerance,
                "seed {seed}: exact g2 {exact:.3} vs tolerance {}",
                out.config.g_tolerance
            );
        }
    }

    #[test]
    fn spectrum_capture_on_gapped_matrices() {
        // sigma_{l+1} / sigma_{k+1} <= 0.01 forces the leading values through
        let mut sigmas = geometric_sigmas(30, 0.95);
        for s in sigmas.iter_mut().skip(15) {
            *s *= 1e-4;
        }
        let a = decaying_spectrum(60, 30, &sigmas, 77).unwrap();
        let out = srqr(&a, fast_decay_config(10, 15, 5)).unwrap();
        assert!(out.diagnostics.certified);
        let sig_a = svd_oracle(&a).unwrap().sigma;
        let sig_rt = svd_oracle(&out.truncated.r_tilde).unwrap().sigma;
        for j in 0..10 {
            let ratio = sig_rt[j] / sig_a[j];
            assert!(ratio >= 0.99, "j={j} ratio={ratio}");
        }
    }
}
