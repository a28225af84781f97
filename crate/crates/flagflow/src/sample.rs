//! Deterministic sampling helpers. All randomized routines in this crate
//! take explicit seeds; identical seeds give identical results regardless
//! of thread count.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// RNG used throughout the crate.
pub type SeededRng = ChaCha8Rng;

/// Build the crate RNG from a seed.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent per-task seed from a base seed and a task index.
/// SplitMix64 finalizer; cheap and collision-free for our sample counts.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Matrix with independent standard normal entries.
pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian with the R-diagonal
/// sign fix).
pub fn haar_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Haar-distributed rotation (orthogonal with determinant +1).
pub fn haar_rotation(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let mut q = haar_orthogonal(rng, n);
    if q.determinant() < 0.0 {
        let col = q.column(0) * -1.0;
        q.set_column(0, &col);
    }
    q
}

/// Block-diagonal rotation with Haar blocks of the given sizes.
pub fn block_haar_rotation(rng: &mut impl Rng, sizes: &[usize]) -> DMatrix<f64> {
    let n: usize = sizes.iter().sum();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for &m in sizes {
        let block = haar_rotation(rng, m);
        out.view_mut((off, off), (m, m)).copy_from(&block);
        off += m;
    }
    out
}

/// Random traceless matrix with Gaussian entries.
pub fn gaussian_traceless(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let mut m = gaussian_matrix(rng, n, n);
    let shift = m.trace() / n as f64;
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    m
}

/// Random symmetric traceless matrix; always a hyperbolic element.
pub fn gaussian_symmetric_traceless(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n);
    let mut m = (&g + g.transpose()) * 0.5;
    let shift = m.trace() / n as f64;
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    m
}

/// Random unit vector of coefficients.
pub fn unit_coefficients(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Block-diagonal orthogonal matrix with Haar blocks of the given sizes.
pub fn block_haar_orthogonal(rng: &mut impl Rng, sizes: &[usize]) -> DMatrix<f64> {
    let n: usize = sizes.iter().sum();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for &m in sizes {
        let block = haar_orthogonal(rng, m);
        out.view_mut((off, off), (m, m)).copy_from(&block);
        off += m;
    }
    out
}
