//! Vector spaces the Krylov methods run in.

use faer::Mat;

use crate::error::{arg, Result};
use crate::lowrank::{self, KroneckerOperator, LowRankMatrix};
use crate::precond::Preconditioner;

/// Operations a Krylov method needs on its iterates.
pub trait KrylovSpace {
    type Elem: Clone;

    fn zero(&self) -> Self::Elem;
    /// `A(x)`, not truncated.
    fn apply(&self, x: &Self::Elem) -> Result<Self::Elem>;
    /// `P^{-1}(x)`, not truncated.
    fn precondition(&self, x: &Self::Elem) -> Result<Self::Elem>;
    /// The compression step; the identity for full-rank iterates.
    fn truncate(&self, x: &Self::Elem) -> Result<Self::Elem>;
    /// `sum_i c_i x_i`, not truncated.
    fn combine(&self, terms: &[(f64, &Self::Elem)]) -> Result<Self::Elem>;
    fn inner(&self, a: &Self::Elem, b: &Self::Elem) -> f64;
    fn norm(&self, a: &Self::Elem) -> f64;
    fn rank(&self, x: &Self::Elem) -> usize;
    fn memory_kb(&self, x: &Self::Elem) -> f64;

    /// Fresh `||F - A(x)||`.
    fn residual_norm(&self, x: &Self::Elem, f: &Self::Elem) -> Result<f64> {
        let ax = self.apply(x)?;
        Ok(self.norm(&self.combine(&[(1.0, f), (-1.0, &ax)])?))
    }

    /// `T(A(x))`.
    fn apply_t(&self, x: &Self::Elem) -> Result<Self::Elem> {
        self.truncate(&self.apply(x)?)
    }

    /// `T(P^{-1}(x))`.
    fn precondition_t(&self, x: &Self::Elem) -> Result<Self::Elem> {
        self.truncate(&self.precondition(x)?)
    }

    /// `T(sum_i c_i x_i)`.
    fn combine_t(&self, terms: &[(f64, &Self::Elem)]) -> Result<Self::Elem> {
        self.truncate(&self.combine(terms)?)
    }
}

/// Iterates in `W V^T` form, truncated at a relative tolerance.
pub struct LowRankSpace<'a> {
    op: &'a KroneckerOperator,
    pc: &'a Preconditioner,
    eps: f64,
}

impl<'a> LowRankSpace<'a> {
    pub fn new(op: &'a KroneckerOperator, pc: &'a Preconditioner, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return arg("truncation tolerance must be positive");
        }
        Ok(Self { op, pc, eps })
    }
}

impl KrylovSpace for LowRankSpace<'_> {
    type Elem = LowRankMatrix;

    fn zero(&self) -> LowRankMatrix {
        LowRankMatrix::zeros(self.op.nd(), self.op.p())
    }

    fn apply(&self, x: &LowRankMatrix) -> Result<LowRankMatrix> {
        lowrank::kron_apply(self.op, x)
    }

    fn precondition(&self, x: &LowRankMatrix) -> Result<LowRankMatrix> {
        self.pc.apply_inverse(x)
    }

    fn truncate(&self, x: &LowRankMatrix) -> Result<LowRankMatrix> {
        lowrank::truncate(x, self.eps)
    }

    fn combine(&self, terms: &[(f64, &LowRankMatrix)]) -> Result<LowRankMatrix> {
        let kept: Vec<(f64, &LowRankMatrix)> = terms.iter().copied().filter(|(c, x)| *c != 0.0 && x.rank() > 0).collect();
        if kept.is_empty() {
            return Ok(self.zero());
        }
        lowrank::lincomb(&kept)
    }

    fn inner(&self, a: &LowRankMatrix, b: &LowRankMatrix) -> f64 {
        lowrank::inner(a, b).expect("iterates share one shape")
    }

    fn norm(&self, a: &LowRankMatrix) -> f64 {
        a.norm()
    }

    fn rank(&self, x: &LowRankMatrix) -> usize {
        x.rank()
    }

    fn memory_kb(&self, x: &LowRankMatrix) -> f64 {
        x.memory_kb()
    }
}

/// Dense `N_d x P` iterates without truncation.
pub struct DenseSpace<'a> {
    op: &'a KroneckerOperator,
    pc: &'a Preconditioner,
}

impl<'a> DenseSpace<'a> {
    pub fn new(op: &'a KroneckerOperator, pc: &'a Preconditioner) -> Result<Self> {
        Ok(Self { op, pc })
    }
}

impl KrylovSpace for DenseSpace<'_> {
    type Elem = Mat<f64>;

    fn zero(&self) -> Mat<f64> {
        Mat::zeros(self.op.nd(), self.op.p())
    }

    fn apply(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
        self.op.apply_dense(x.as_ref())
    }

    fn precondition(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
        self.pc.apply_inverse_dense(x.as_ref())
    }

    fn truncate(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
        Ok(x.clone())
    }

    fn combine(&self, terms: &[(f64, &Mat<f64>)]) -> Result<Mat<f64>> {
        let mut out = self.zero();
        for (c, x) in terms {
            if *c != 0.0 {
                out += *x * faer::Scale(*c);
            }
        }
        Ok(out)
    }

    fn inner(&self, a: &Mat<f64>, b: &Mat<f64>) -> f64 {
        (0..a.ncols()).map(|j| a.col_as_slice(j).iter().zip(b.col_as_slice(j)).map(|(x, y)| x * y).sum::<f64>()).sum()
    }

    fn norm(&self, a: &Mat<f64>) -> f64 {
        a.norm_l2()
    }

    fn rank(&self, x: &Mat<f64>) -> usize {
        x.nrows().min(x.ncols())
    }

    fn memory_kb(&self, x: &Mat<f64>) -> f64 {
        8.0 * (x.nrows() * x.ncols()) as f64 / 1024.0
    }
}
