//! Small shared linear-algebra and RNG helpers used across the crate.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Deterministic stream-splitting for named seeds (splitmix64 finalizer).
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a base seed and a stream index.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_mul(0xa076_1d64_78bd_642f)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard-normal draw.
pub fn randn(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Circularly-symmetric complex Gaussian with the given total variance
/// (real and imaginary parts each carry half of it).
pub fn randcn(rng: &mut impl Rng, variance: f64) -> Complex<f64> {
    let s = (variance / 2.0).sqrt();
    Complex::new(s * randn(rng), s * randn(rng))
}

/// Indices selected by a subset bitmask, ascending.
pub fn mask_indices(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1u32 << i) != 0).collect()
}

pub fn mask_complement(mask: u32, n: usize) -> u32 {
    !mask & ((1u32 << n) - 1)
}

/// Submatrix picking rows from `row_mask` and columns from `col_mask`.
pub fn submatrix(m: &DMatrix<f64>, row_mask: u32, col_mask: u32) -> DMatrix<f64> {
    let rows = mask_indices(row_mask, m.nrows());
    let cols = mask_indices(col_mask, m.ncols());
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Principal submatrix on the indices of `mask`.
pub fn principal_submatrix(m: &DMatrix<f64>, mask: u32) -> DMatrix<f64> {
    submatrix(m, mask, mask)
}

/// Determinant of a principal submatrix; the empty submatrix has determinant 1.
pub fn det_principal(m: &DMatrix<f64>, mask: u32) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    let sub = principal_submatrix(m, mask);
    sub.determinant()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Projects a symmetric matrix to the PSD cone by clamping eigenvalues at zero.
pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let q = eig.eigenvectors;
    let lam = eig.eigenvalues.map(|v| v.max(0.0));
    &q * DMatrix::from_diagonal(&lam) * q.transpose()
}

/// Solves a symmetric positive-definite system, falling back to a ridge-regularized
/// solve when the factorization fails.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let scale = m.diagonal().amax().max(1e-300);
    let mut reg = m.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += 1e-12 * scale;
    }
    reg.clone()
        .cholesky()
        .map(|c| c.solve(b))
        .or_else(|| reg.lu().solve(b))
        .ok_or_else(|| Error::Numeric("singular symmetric system".into()))
}

/// Dominant eigenvector of a Hermitian PSD matrix by power iteration
/// (deterministic start; adequate for the small matrices used here).
pub fn top_eigvec_hermitian(m: &DMatrix<Complex<f64>>, iters: usize) -> DVector<Complex<f64>> {
    let n = m.nrows();
    let mut v = DVector::from_element(n, Complex::new(1.0, 0.0));
    let norm = v.norm();
    v /= Complex::new(norm, 0.0);
    for _ in 0..iters {
        let w = m * &v;
        let nw = w.norm();
        if nw < 1e-300 {
            return v;
        }
        v = w / Complex::new(nw, 0.0);
    }
    v
}

/// Lower Cholesky factor of a symmetric PSD matrix, clamping slightly negative
/// eigenvalues first so sampling from empirical covariances cannot fail.
pub fn psd_cholesky(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(c) = m.clone().cholesky() {
        return c.l();
    }
    let eig = m.clone().symmetric_eigen();
    let q = eig.eigenvectors;
    let lam = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &q * DMatrix::from_diagonal(&lam)
}
