//! Compressed sparse row matrices used for the spatial and stochastic
//! operators, with conversions to faer for factorizations.

use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef};

use crate::error::{arg, Error, Result};
use crate::exec;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triples; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return arg(format!("entry ({r},{c}) outside {nrows}x{ncols}"));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|e| e.0);
            for &(c, v) in &row {
                if indices.len() > indptr[i] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], values: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Number of nonzero (not merely stored) entries in row `i`.
    pub fn row_nnz(&self, i: usize) -> usize {
        self.row(i).filter(|e| e.1 != 0.0).count()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `A * X` for a dense block `X` with `ncols` rows.
    pub fn mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.ncols, "dimension mismatch in sparse * dense");
        let (m, k) = (self.nrows, x.ncols());
        if m == 0 || k == 0 {
            return Mat::zeros(m, k);
        }
        // Work on rows of X stored contiguously so the inner loop is a dense axpy.
        let xt = x.transpose().to_owned();
        const ROWS: usize = 256;
        let mut out_t = vec![0.0; m * k];
        exec::for_each_chunk_mut(&mut out_t, ROWS * k, |block, out| {
            for (local, o) in out.chunks_mut(k).enumerate() {
                let i = block * ROWS + local;
                for p in self.indptr[i]..self.indptr[i + 1] {
                    let v = self.values[p];
                    for (a, b) in o.iter_mut().zip(xt.col_as_slice(self.indices[p])) {
                        *a += v * b;
                    }
                }
            }
        });
        Mat::from_fn(m, k, |i, j| out_t[i * k + j])
    }

    /// `X * A^T` for a dense block `X` with `ncols` columns.
    pub fn mul_dense_transposed_right(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.ncols(), self.ncols, "dimension mismatch in dense * sparse^T");
        let mut out = Mat::zeros(x.nrows(), self.nrows);
        for i in 0..self.nrows {
            let dst = out.col_as_slice_mut(i);
            for (j, v) in self.row(i) {
                for (d, k) in dst.iter_mut().zip(0..x.nrows()) {
                    *d += v * x[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("transpose keeps indices in range")
    }

    /// `trace(A^T B) = sum_ij a_ij b_ij`.
    pub fn frobenius_inner(&self, other: &Self) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        (0..self.nrows)
            .map(|i| {
                let mut s = 0.0;
                let mut b = other.row(i).peekable();
                for (j, v) in self.row(i) {
                    while b.peek().is_some_and(|e| e.0 < j) {
                        b.next();
                    }
                    if let Some(&(k, w)) = b.peek() {
                        if k == j {
                            s += v * w;
                        }
                    }
                }
                s
            })
            .sum()
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, &t).expect("same shape")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.linear_combination(1.0, &t, -1.0).values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Row-sum infinity norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows).map(|i| self.row(i).map(|e| e.1.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::Internal(format!("sparse conversion failed: {e:?}")))
    }

    /// Kronecker product `G (x) K`, indexed so that `vec` stacks columns of
    /// an `nrows(K) x nrows(G)` matrix.
    pub fn kron(g: &Self, k: &Self) -> Self {
        let mut t = Vec::with_capacity(g.nnz() * k.nnz());
        for (a, b, gv) in g.triplets() {
            for (i, l, kv) in k.triplets() {
                t.push((a * k.nrows + i, b * k.ncols + l, gv * kv));
            }
        }
        Self::from_triplets(g.nrows * k.nrows, g.ncols * k.ncols, &t).expect("indices in range")
    }
}
