#![allow(dead_code)]

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgdg::chaos::chaos_basis;
use sgdg::lowrank::{KroneckerOperator, LowRankMatrix};
use sgdg::sparse::CsrMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Mat<f64> {
    Mat::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_low_rank(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize) -> LowRankMatrix {
    LowRankMatrix::new(random_mat(rng, m, r), random_mat(rng, n, r)).unwrap()
}

/// Sparse `n x n` matrix with a dominant diagonal of size `diag` plus
/// random off-diagonal entries.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, diag: f64, scale: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, diag + scale * rng.random_range(-1.0..1.0)));
        for _ in 0..3 {
            let j = rng.random_range(0..n);
            t.push((i, j, scale * rng.random_range(-1.0..1.0)));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// `sum_k G_k (x) K_k` with chaos matrices for `(n, q)` and random spatial
/// blocks; the mean block dominates.
pub fn random_operator(rng: &mut ChaCha8Rng, nd: usize, n: usize, q: usize) -> KroneckerOperator {
    let basis = chaos_basis(n, q).unwrap();
    let terms = basis
        .g_mats
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let kk = if k == 0 { random_sparse(rng, nd, 8.0, 1.0) } else { random_sparse(rng, nd, 0.0, 0.3) };
            (g.clone(), kk)
        })
        .collect();
    KroneckerOperator::new(terms).unwrap()
}

pub fn rel_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let scale = b.norm_l2().max(f64::MIN_POSITIVE);
    (a - b).norm_l2() / scale
}

/// `vec` with stacked columns.
pub fn vec_of(x: &Mat<f64>) -> Vec<f64> {
    (0..x.ncols()).flat_map(|j| (0..x.nrows()).map(move |i| (i, j))).map(|(i, j)| x[(i, j)]).collect()
}
