//! Legendre polynomial chaos: multi-indices, orthonormal Legendre
//! polynomials for uniform variables on `(-sqrt3, sqrt3)`, and the
//! stochastic Galerkin matrices `G_k(i, j) = <xi_k psi_i psi_j>`.

use std::collections::HashMap;

use crate::error::{arg, Result};
use crate::sparse::CsrMatrix;

/// Total-degree multi-index set.
///
/// Ordered by total degree, then lexicographically descending inside each
/// degree, so that the degree-one indices come out as `e_1, ..., e_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexSet {
    pub n: usize,
    pub q: usize,
    pub indices: Vec<Vec<u32>>,
}

impl MultiIndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Position of `alpha` in the set.
    pub fn position(&self, alpha: &[u32]) -> Option<usize> {
        self.indices.iter().position(|a| a == alpha)
    }
}

/// `binomial(n + q, q)`, or `None` on overflow.
pub fn basis_size(n: usize, q: usize) -> Option<usize> {
    let mut p: u128 = 1;
    for i in 1..=q as u128 {
        p = p.checked_mul(n as u128 + i)? / i;
    }
    usize::try_from(p).ok()
}

fn push_degree(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<Vec<u32>>) {
    if slots == 1 {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=remaining).rev() {
        prefix.push(first);
        push_degree(prefix, remaining - first, slots - 1, out);
        prefix.pop();
    }
}

/// All multi-indices in `N^n` with total degree at most `q`.
pub fn enumerate_indices(n: usize, q: usize) -> Result<MultiIndexSet> {
    if n == 0 {
        return arg("stochastic dimension must be at least 1");
    }
    let p = match basis_size(n, q) {
        Some(p) if p <= u32::MAX as usize => p,
        _ => return arg(format!("basis size for N={n}, Q={q} overflows the index range")),
    };
    let mut indices = Vec::with_capacity(p);
    for d in 0..=q as u32 {
        push_degree(&mut Vec::with_capacity(n), d, n, &mut indices);
    }
    debug_assert_eq!(indices.len(), p);
    Ok(MultiIndexSet { n, q, indices })
}

/// Orthonormal Legendre polynomial of degree `k` for the uniform density on
/// `(-sqrt3, sqrt3)`.
pub fn legendre_eval(k: usize, x: f64) -> f64 {
    let s3 = 3f64.sqrt();
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let jf = j as f64;
        let a = (2.0 * jf + 1.0).sqrt() * (2.0 * jf + 3.0).sqrt() / ((jf + 1.0) * s3);
        let b = if j == 0 { 0.0 } else { jf * (2.0 * jf + 3.0).sqrt() / ((jf + 1.0) * (2.0 * jf - 1.0).sqrt()) };
        let next = a * x * cur - b * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Multivariate basis function `psi_alpha(xi) = prod_k psi_{alpha_k}(xi_k)`.
pub fn eval_multi(alpha: &[u32], xi: &[f64]) -> f64 {
    alpha.iter().zip(xi).map(|(&a, &x)| legendre_eval(a as usize, x)).product()
}

/// `<xi psi_m psi_{m+1}>` for the orthonormal family.
pub fn coupling(m: u32) -> f64 {
    let m = m as f64;
    (m + 1.0) * 3f64.sqrt() / ((2.0 * m + 1.0) * (2.0 * m + 3.0)).sqrt()
}

/// Multi-index set with the matrices `G_0 ... G_N` and vectors `g_0 ... g_N`.
#[derive(Clone, Debug)]
pub struct ChaosBasis {
    pub set: MultiIndexSet,
    pub g_mats: Vec<CsrMatrix>,
    pub g_vecs: Vec<Vec<f64>>,
}

impl ChaosBasis {
    pub fn size(&self) -> usize {
        self.set.len()
    }

    pub fn dimension(&self) -> usize {
        self.set.n
    }
}

pub fn build_g(set: MultiIndexSet) -> ChaosBasis {
    let p = set.len();
    let lookup: HashMap<&[u32], usize> = set.indices.iter().enumerate().map(|(i, a)| (a.as_slice(), i)).collect();
    let mut g_mats = vec![CsrMatrix::identity(p)];
    for k in 0..set.n {
        let mut t = Vec::new();
        let mut up = vec![0u32; set.n];
        for (i, alpha) in set.indices.iter().enumerate() {
            up.copy_from_slice(alpha);
            up[k] += 1;
            if let Some(&j) = lookup.get(up.as_slice()) {
                let v = coupling(alpha[k]);
                t.push((i, j, v));
                t.push((j, i, v));
            }
        }
        g_mats.push(CsrMatrix::from_triplets(p, p, &t).expect("indices within the basis"));
    }
    let g_vecs = g_mats.iter().map(|g| (0..p).map(|i| g.get(i, 0)).collect()).collect();
    ChaosBasis { set, g_mats, g_vecs }
}

/// Convenience wrapper: enumerate and build in one step.
pub fn chaos_basis(n: usize, q: usize) -> Result<ChaosBasis> {
    Ok(build_g(enumerate_indices(n, q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn sizes() {
        assert_eq!(enumerate_indices(3, 2).unwrap().len(), 10);
        assert_eq!(enumerate_indices(7, 3).unwrap().len(), 120);
        assert_eq!(enumerate_indices(9, 3).unwrap().len(), 220);
        assert_eq!(enumerate_indices(4, 0).unwrap().len(), 1);
        assert!(enumerate_indices(0, 2).is_err());
        assert!(enumerate_indices(1000, 1000).is_err());
    }

    #[test]
    fn one_dimensional_order() {
        let s = enumerate_indices(1, 4).unwrap();
        let flat: Vec<u32> = s.indices.iter().map(|a| a[0]).collect();
        assert_eq!(flat, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn graded_order_with_unit_vectors_first() {
        let s = enumerate_indices(3, 2).unwrap();
        assert_eq!(s.indices[0], vec![0, 0, 0]);
        assert_eq!(s.indices[1], vec![1, 0, 0]);
        assert_eq!(s.indices[2], vec![0, 1, 0]);
        assert_eq!(s.indices[3], vec![0, 0, 1]);
        let degrees: Vec<u32> = s.indices.iter().map(|a| a.iter().sum()).collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn legendre_low_degrees() {
        for &x in &[-1.5, 0.0, 0.3, 1.7] {
            assert_eq!(legendre_eval(0, x), 1.0);
            assert!((legendre_eval(1, x) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn legendre_orthonormal() {
        let (x, w) = gauss_legendre(20);
        let s3 = 3f64.sqrt();
        for k in 0..=8 {
            for l in 0..=8 {
                // Uniform density 1/(2 sqrt3) on (-sqrt3, sqrt3).
                let q: f64 = x.iter().zip(&w).map(|(x, w)| 0.5 * w * legendre_eval(k, s3 * x) * legendre_eval(l, s3 * x)).sum();
                assert!((q - if k == l { 1.0 } else { 0.0 }).abs() < 1e-12, "{k},{l}: {q}");
            }
        }
    }

    #[test]
    fn g_entries_one_dimensional() {
        let b = chaos_basis(1, 2).unwrap();
        assert!((b.g_mats[1].get(0, 1) - 1.0).abs() < 1e-15);
        assert!((b.g_mats[1].get(1, 2) - 2.0 * 3f64.sqrt() / 15f64.sqrt()).abs() < 1e-15);
        assert!((b.g_mats[1].get(1, 2) - 0.894427).abs() < 1e-6);
    }

    #[test]
    fn structural_invariants() {
        let b = chaos_basis(4, 3).unwrap();
        assert_eq!(b.g_mats[0], CsrMatrix::identity(b.size()));
        for (k, g) in b.g_mats.iter().enumerate().skip(1) {
            assert_eq!(g.max_asymmetry(), 0.0);
            for i in 0..b.size() {
                assert!(g.row_nnz(i) <= 2);
                assert_eq!(b.g_vecs[k][i], g.get(i, 0));
            }
            for (_, _, v) in g.triplets() {
                assert!(v > 0.0 && v < 3f64.sqrt());
            }
        }
        let mut e1 = vec![0.0; b.size()];
        e1[0] = 1.0;
        assert_eq!(b.g_vecs[0], e1);
        for k in 1..=4 {
            assert_eq!(b.g_vecs[k][k], 1.0);
            assert_eq!(b.g_vecs[k].iter().filter(|&&v| v != 0.0).count(), 1);
        }
    }
}
