//! Low-rank matrices `U = W V^T` and the operations the Krylov solvers need.
//!
//! A Kronecker operator `A = sum_k G_k (x) K_k` acts on the column-stacked
//! `vec(U)` of an `N_d x P` matrix as `U -> sum_k K_k U G_k^T`, which in
//! factored form is `[K_0 W | ... | K_N W] [G_0 V | ... | G_N V]^T`.

use faer::{Mat, MatRef};

use crate::error::{arg, Error, Result};
use crate::exec;
use crate::sparse::CsrMatrix;

/// Hard upper bound on the rank kept by [`truncate`].
pub const RANK_CAP: usize = 200;

#[derive(Clone, Debug)]
pub struct LowRankMatrix {
    w: Mat<f64>,
    v: Mat<f64>,
}

/// Horizontal concatenation of blocks with equal row counts.
pub fn hcat(nrows: usize, blocks: &[MatRef<'_, f64>]) -> Mat<f64> {
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(nrows, ncols);
    let mut j0 = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), nrows);
        out.as_mut().subcols_mut(j0, b.ncols()).copy_from(*b);
        j0 += b.ncols();
    }
    out
}

impl LowRankMatrix {
    pub fn new(w: Mat<f64>, v: Mat<f64>) -> Result<Self> {
        if w.ncols() != v.ncols() {
            return arg(format!("factor ranks differ: {} vs {}", w.ncols(), v.ncols()));
        }
        Ok(Self { w, v })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { w: Mat::zeros(nrows, 0), v: Mat::zeros(ncols, 0) }
    }

    /// Exact factorization `X = X I` of a dense matrix.
    pub fn from_dense(x: MatRef<'_, f64>) -> Self {
        Self { w: x.to_owned(), v: Mat::identity(x.ncols(), x.ncols()) }
    }

    pub fn rank_one(w: &[f64], v: &[f64]) -> Self {
        Self { w: Mat::from_fn(w.len(), 1, |i, _| w[i]), v: Mat::from_fn(v.len(), 1, |i, _| v[i]) }
    }

    pub fn nrows(&self) -> usize {
        self.w.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn w(&self) -> MatRef<'_, f64> {
        self.w.as_ref()
    }

    pub fn v(&self) -> MatRef<'_, f64> {
        self.v.as_ref()
    }

    pub fn into_factors(self) -> (Mat<f64>, Mat<f64>) {
        (self.w, self.v)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        if self.rank() == 0 {
            return Mat::zeros(self.nrows(), self.ncols());
        }
        &self.w * self.v.transpose()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { w: &self.w * faer::Scale(alpha), v: self.v.clone() }
    }

    /// Frobenius norm from a QR factorization of `V`; accurate even when
    /// the factors nearly cancel.
    pub fn norm(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let r = self.v.qr().thin_R().to_owned();
        (&self.w * r.transpose()).norm_l2()
    }

    /// `8 r (N_d + P) / 1024`: kilobytes of both factors in `f64`.
    pub fn memory_kb(&self) -> f64 {
        memory_kb_for(self.rank(), self.nrows(), self.ncols())
    }
}

pub fn memory_kb_for(rank: usize, nrows: usize, ncols: usize) -> f64 {
    8.0 * rank as f64 * (nrows + ncols) as f64 / 1024.0
}

pub fn memory_kb(x: &LowRankMatrix) -> f64 {
    x.memory_kb()
}

/// Compresses `x`, keeping singular values above `eps * sigma_1`, at most
/// `min(N_d, P, RANK_CAP)` of them.
pub fn truncate(x: &LowRankMatrix, eps: f64) -> Result<LowRankMatrix> {
    truncate_with_cap(x, eps, RANK_CAP)
}

pub fn truncate_with_cap(x: &LowRankMatrix, eps: f64, cap: usize) -> Result<LowRankMatrix> {
    if !(eps > 0.0) {
        return arg(format!("truncation tolerance must be positive, got {eps}"));
    }
    let (nd, p) = (x.nrows(), x.ncols());
    let cap = cap.min(nd).min(p);
    if x.rank() == 0 || cap == 0 {
        return Ok(LowRankMatrix::zeros(nd, p));
    }
    // X = W V^T = (W R_v^T) Q_v^T = Q_w R_w Q_v^T, then SVD of the small R_w.
    let qv = x.v.qr();
    let (q_v, r_v) = (qv.compute_thin_Q(), qv.thin_R().to_owned());
    let what = &x.w * r_v.transpose();
    let r_w = what.qr().thin_R().to_owned();
    let svd = r_w.thin_svd().map_err(|e| Error::Internal(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let s1 = if s.nrows() > 0 { s[0] } else { 0.0 };
    // Singular values at rounding level of the factor norms are noise; this
    // is what sends X - X to rank zero.
    let floor = 64.0 * f64::EPSILON * x.w.norm_l2() * x.v.norm_l2();
    if !s1.is_finite() {
        return Err(Error::Internal("non-finite singular values".into()));
    }
    let keep = (0..s.nrows()).take_while(|&i| s[i] > eps * s1 && s[i] > floor).count().min(cap);
    if keep == 0 {
        return Ok(LowRankMatrix::zeros(nd, p));
    }
    // Q_w U_k S_k = W^ V_k, which spares forming Q_w.
    let vk = svd.V().subcols(0, keep);
    let w = &what * vk;
    let v = &q_v * vk;
    Ok(LowRankMatrix { w, v })
}

/// `sum_k G_k (x) K_k` as a list of `(G_k, K_k)` pairs.
#[derive(Clone, Debug)]
pub struct KroneckerOperator {
    terms: Vec<(CsrMatrix, CsrMatrix)>,
}

impl KroneckerOperator {
    pub fn new(terms: Vec<(CsrMatrix, CsrMatrix)>) -> Result<Self> {
        let Some((g0, k0)) = terms.first() else {
            return arg("operator needs at least one term");
        };
        let (p, nd) = (g0.nrows(), k0.nrows());
        for (k, (g, kk)) in terms.iter().enumerate() {
            if g.nrows() != p || g.ncols() != p || kk.nrows() != nd || kk.ncols() != nd {
                return arg(format!("term {k} has inconsistent dimensions"));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(CsrMatrix, CsrMatrix)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Spatial dimension `N_d`.
    pub fn nd(&self) -> usize {
        self.terms[0].1.nrows()
    }

    /// Stochastic dimension `P`.
    pub fn p(&self) -> usize {
        self.terms[0].0.nrows()
    }

    /// `sum_k K_k X G_k^T` for a dense `N_d x P` matrix.
    pub fn apply_dense(&self, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
        if x.nrows() != self.nd() || x.ncols() != self.p() {
            return arg(format!("expected {}x{} matrix, got {}x{}", self.nd(), self.p(), x.nrows(), x.ncols()));
        }
        let parts = exec::map_range(self.terms.len(), |k| {
            let (g, kk) = &self.terms[k];
            g.mul_dense_transposed_right(kk.mul_dense(x).as_ref())
        });
        let mut out = Mat::zeros(self.nd(), self.p());
        for part in parts {
            out += part;
        }
        Ok(out)
    }

    /// The global sparse matrix acting on column-stacked vectors.
    pub fn assemble_global(&self) -> CsrMatrix {
        let mut acc: Option<CsrMatrix> = None;
        for (g, k) in &self.terms {
            let gk = CsrMatrix::kron(g, k);
            acc = Some(match acc {
                None => gk,
                Some(a) => a.linear_combination(1.0, &gk, 1.0),
            });
        }
        acc.expect("at least one term")
    }
}

/// Applies the operator in factored form; the rank grows to `(N+1) r`.
pub fn kron_apply(op: &KroneckerOperator, x: &LowRankMatrix) -> Result<LowRankMatrix> {
    if x.nrows() != op.nd() || x.ncols() != op.p() {
        return arg(format!(
            "operator is {}x{} blocks, argument is {}x{}",
            op.nd(),
            op.p(),
            x.nrows(),
            x.ncols()
        ));
    }
    let parts = exec::map_range(op.terms.len(), |k| {
        let (g, kk) = &op.terms[k];
        (kk.mul_dense(x.w()), g.mul_dense(x.v()))
    });
    let ws: Vec<MatRef<'_, f64>> = parts.iter().map(|p| p.0.as_ref()).collect();
    let vs: Vec<MatRef<'_, f64>> = parts.iter().map(|p| p.1.as_ref()).collect();
    Ok(LowRankMatrix { w: hcat(op.nd(), &ws), v: hcat(op.p(), &vs) })
}

/// `trace(Y^T Z)` via `sum (W_Y^T W_Z) o (V_Y^T V_Z)`.
pub fn inner(y: &LowRankMatrix, z: &LowRankMatrix) -> Result<f64> {
    if y.nrows() != z.nrows() || y.ncols() != z.ncols() {
        return arg("inner product of matrices with different shapes");
    }
    if y.rank() == 0 || z.rank() == 0 {
        return Ok(0.0);
    }
    let a = y.w.transpose() * &z.w;
    let b = y.v.transpose() * &z.v;
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    Ok(s)
}

/// `alpha X + Y` by factor concatenation (no truncation).
pub fn axpy(alpha: f64, x: &LowRankMatrix, y: &LowRankMatrix) -> Result<LowRankMatrix> {
    lincomb(&[(alpha, x), (1.0, y)])
}

/// `sum_i c_i X_i` by factor concatenation (no truncation).
pub fn lincomb(terms: &[(f64, &LowRankMatrix)]) -> Result<LowRankMatrix> {
    let Some((_, first)) = terms.first() else {
        return arg("empty linear combination");
    };
    let (nd, p) = (first.nrows(), first.ncols());
    if terms.iter().any(|(_, x)| x.nrows() != nd || x.ncols() != p) {
        return arg("linear combination of matrices with different shapes");
    }
    let scaled: Vec<Mat<f64>> = terms.iter().map(|(c, x)| &x.w * faer::Scale(*c)).collect();
    let ws: Vec<MatRef<'_, f64>> = scaled.iter().map(|m| m.as_ref()).collect();
    let vs: Vec<MatRef<'_, f64>> = terms.iter().map(|(_, x)| x.v.as_ref()).collect();
    Ok(LowRankMatrix { w: hcat(nd, &ws), v: hcat(p, &vs) })
}
