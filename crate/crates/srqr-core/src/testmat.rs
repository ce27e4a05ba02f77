//! Reproducible test-matrix generators.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::householder::householder_qr;
use crate::matrix::DenseMatrix;

/// Parameters of the upper-triangular Kahan matrix: `K[i][i] = s^i`,
/// `K[i][j] = -c * s^i` for `j > i` (0-based rows).
#[derive(Debug, Clone, Copy)]
pub struct KahanSpec {
    pub n: usize,
    pub c: f64,
    pub s: f64,
}

impl KahanSpec {
    /// The conventional parametrization: given `c`, sets `s` so that
    /// `c^2 + s^2 = 0.9999`.
    pub fn with_default_s(n: usize, c: f64) -> Self {
        Self {
            n,
            c,
            s: (0.9999 - c * c).sqrt(),
        }
    }
}

/// Generates the Kahan matrix, the classic example on which norm-greedy
/// column pivoting fails to reveal the numerical rank.
pub fn kahan(spec: &KahanSpec) -> Result<DenseMatrix> {
    if spec.n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if !(spec.c > 0.0 && spec.c < 1.0 && spec.s > 0.0 && spec.s * spec.s + spec.c * spec.c <= 1.0)
    {
        return Err(Error::InvalidConfig("kahan requires 0 < c < 1, s > 0, s^2 + c^2 <= 1"));
    }
    let n = spec.n;
    let mut diag_scale = 1.0;
    let mut k = DenseMatrix::zeros(n, n);
    for i in 0..n {
        k.set(i, i, diag_scale);
        for j in i + 1..n {
            k.set(i, j, -spec.c * diag_scale);
        }
        diag_scale *= spec.s;
    }
    Ok(k)
}

/// Matrix of i.i.d. standard normals drawn column-major from `rng`.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random orthogonal matrix: Q factor of a seeded Gaussian square matrix.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha20Rng) -> DenseMatrix {
    let g = gaussian_matrix(n, n, rng);
    let (q, _) = householder_qr(&g, n).expect("square gaussian");
    q.explicit()
}

/// Geometric singular value ladder `1, ratio, ratio^2, ..` of length `count`.
pub fn geometric_sigmas(count: usize, ratio: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut s = 1.0;
    for _ in 0..count {
        out.push(s);
        s *= ratio;
    }
    out
}

/// `A = U * diag(sigmas) * V^T` with seeded random orthogonal factors.
///
/// `sigmas` must be nonnegative and non-increasing, with one value per
/// singular direction (`min(m, n)` of them).
pub fn decaying_spectrum(m: usize, n: usize, sigmas: &[f64], seed: u64) -> Result<DenseMatrix> {
    let r = m.min(n);
    if sigmas.len() != r {
        return Err(Error::DataLength {
            rows: r,
            cols: 1,
            found: sigmas.len(),
        });
    }
    if sigmas.iter().any(|s| !(*s >= 0.0)) || sigmas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidConfig("sigmas must be nonnegative and descending"));
    }
    use rand::SeedableRng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let u = random_orthogonal(m, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    // A = sum_t sigma_t * u_t v_t^T over the leading r directions
    let mut a = DenseMatrix::zeros(m, n);
    for t in 0..r {
        if sigmas[t] == 0.0 {
            break;
        }
        let ucol = u.col(t);
        for j in 0..n {
            let w = sigmas[t] * v.get(j, t);
            if w == 0.0 {
                continue;
            }
            let acol = a.col_mut(j);
            for i in 0..m {
                acol[i] += w * ucol[i];
            }
        }
    }
    Ok(a)
}

/// Symmetric positive semidefinite Gaussian-kernel matrix on `n` seeded
/// random points in `dim` dimensions: `K[i][j] = exp(-|x_i - x_j|^2 / (2h^2))`.
pub fn spd_kernel(n: usize, dim: usize, bandwidth: f64, seed: u64) -> Result<DenseMatrix> {
    if n == 0 || dim == 0 {
        return Err(Error::EmptyMatrix);
    }
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidConfig("bandwidth must be positive"));
    }
    use rand::SeedableRng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let points = gaussian_matrix(dim, n, &mut rng);
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut k = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let pj = points.col(j);
        for i in 0..=j {
            let pi = points.col(i);
            let dist_sq: f64 = pi
                .iter()
                .zip(pj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-dist_sq * inv).exp();
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::svd_oracle;
    use rand::SeedableRng;

    #[test]
    fn kahan_smallest_cases() {
        let k1 = kahan(&KahanSpec::with_default_s(1, 0.285)).unwrap();
        assert_eq!(k1.rows(), 1);
        assert_eq!(k1.get(0, 0), 1.0);

        let k3 = kahan(&KahanSpec::with_default_s(3, 0.285)).unwrap();
        assert_eq!(k3.get(0, 0), 1.0);
        assert_eq!(k3.get(0, 1), -0.285);
        assert_eq!(k3.get(0, 2), -0.285);
        assert_eq!(k3.get(1, 0), 0.0);
    }

    #[test]
    fn kahan_diagonal_decays_geometrically() {
        let spec = KahanSpec::with_default_s(10, 0.285);
        let k = kahan(&spec).unwrap();
        for i in 0..10 {
            assert!((k.get(i, i) - spec.s.powi(i as i32)).abs() <= 1e-15);
        }
    }

    #[test]
    fn kahan_trailing_singular_value_is_hidden() {
        // the rank deficiency is invisible in the diagonal
        let spec = KahanSpec::with_default_s(96, 0.285);
        let k = kahan(&spec).unwrap();
        let sigma = svd_oracle(&k).unwrap().sigma;
        let last_diag = k.get(95, 95);
        assert!(sigma[95] / last_diag <= 1e-3);
    }

    #[test]
    fn rank_one_sigma_list() {
        let a = decaying_spectrum(5, 3, &[1.0, 0.0, 0.0], 7).unwrap();
        let sigma = svd_oracle(&a).unwrap().sigma;
        assert!((sigma[0] - 1.0).abs() <= 1e-12);
        assert!(sigma[1] <= 1e-12);
    }

    #[test]
    fn spectrum_round_trips_through_oracle() {
        let sigmas = geometric_sigmas(20, 0.5);
        let a = decaying_spectrum(20, 20, &sigmas, 42).unwrap();
        let recovered = svd_oracle(&a).unwrap().sigma;
        for (r, e) in recovered.iter().zip(&sigmas) {
            assert!((r - e).abs() <= 1e-9 * sigmas[0]);
        }
    }

    #[test]
    fn flat_spectrum_frobenius_identity() {
        let sigmas = alloc::vec![2.5; 12];
        let a = decaying_spectrum(16, 12, &sigmas, 3).unwrap();
        let expect = 2.5 * (12.0_f64).sqrt();
        assert!((a.frobenius_norm() - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn kernel_matrix_is_spd() {
        let k = spd_kernel(30, 3, 1.5, 11).unwrap();
        for i in 0..30 {
            assert!((k.get(i, i) - 1.0).abs() <= 1e-15);
            for j in 0..30 {
                assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
        let sigma = svd_oracle(&k).unwrap().sigma;
        assert!(sigma.iter().all(|&s| s >= -1e-12));
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let mut r1 = ChaCha20Rng::seed_from_u64(99);
        let mut r2 = ChaCha20Rng::seed_from_u64(99);
        assert_eq!(gaussian_matrix(6, 4, &mut r1), gaussian_matrix(6, 4, &mut r2));
        assert_eq!(
            decaying_spectrum(8, 8, &geometric_sigmas(8, 0.7), 5).unwrap(),
            decaying_spectrum(8, 8, &geometric_sigmas(8, 0.7), 5).unwrap()
        );
    }
}
