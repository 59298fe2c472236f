//! Mean-based and Ullmann preconditioners in Kronecker form.
//!
//! Both have the shape `G~ (x) K_0`: `G~ = I` for the mean-based variant and
//! `G~ = sum_k c_k G_k` with `c_k = <K_k, K_0>_F / <K_0, K_0>_F` for the
//! Ullmann variant. The inverse maps `W V^T` to `(K_0^{-1} W)(G~^{-1} V)^T`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::Lu;
use faer::{Mat, MatRef};

use crate::error::{arg, Error, Result};
use crate::lowrank::{KroneckerOperator, LowRankMatrix};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionerKind {
    Mean,
    Ullmann,
    None,
}

impl std::str::FromStr for PreconditionerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "ullmann" => Ok(Self::Ullmann),
            "none" => Ok(Self::None),
            _ => arg(format!("unknown preconditioner '{s}'")),
        }
    }
}

pub struct Preconditioner {
    kind: PreconditionerKind,
    k0: Option<(CsrMatrix, Lu<usize, f64>)>,
    coefficients: Vec<f64>,
    g_tilde: Option<(CsrMatrix, PartialPivLu<f64>)>,
}

impl std::fmt::Debug for Preconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preconditioner").field("kind", &self.kind).field("coefficients", &self.coefficients).finish()
    }
}

fn factor_sparse(k: &CsrMatrix) -> Result<Lu<usize, f64>> {
    let lu = k.to_faer()?.sp_lu().map_err(|e| Error::Setup(format!("sparse LU of K_0 failed: {e:?}")))?;
    // faer does not report zero pivots; probe the factorization instead.
    let mut probe = Mat::from_fn(k.nrows(), 1, |_, _| 1.0);
    lu.solve_in_place(probe.as_mut());
    if probe.col_as_slice(0).iter().any(|v| !v.is_finite()) {
        return Err(Error::Setup("K_0 is singular".into()));
    }
    Ok(lu)
}

impl Preconditioner {
    pub fn build(kind: PreconditionerKind, op: &KroneckerOperator) -> Result<Self> {
        let k0m = &op.terms()[0].1;
        let mut pc = Self { kind, k0: None, coefficients: vec![], g_tilde: None };
        if kind == PreconditionerKind::None {
            return Ok(pc);
        }
        pc.k0 = Some((k0m.clone(), factor_sparse(k0m)?));
        if kind == PreconditionerKind::Ullmann {
            let denom = k0m.frobenius_inner(k0m);
            if denom == 0.0 {
                return Err(Error::Setup("K_0 is zero".into()));
            }
            pc.coefficients = op.terms().iter().map(|(_, k)| k.frobenius_inner(k0m) / denom).collect();
            let p = op.p();
            let mut g = CsrMatrix::zeros(p, p);
            for ((gk, _), c) in op.terms().iter().zip(&pc.coefficients) {
                g = g.linear_combination(1.0, gk, *c);
            }
            let lu = g.to_dense().partial_piv_lu();
            let mut probe = Mat::<f64>::identity(p, p);
            lu.solve_in_place(probe.as_mut());
            if probe.norm_l2().is_nan() || !probe.norm_l2().is_finite() {
                return Err(Error::Setup("Ullmann stochastic matrix is singular".into()));
            }
            pc.g_tilde = Some((g, lu));
        }
        Ok(pc)
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    /// Ullmann weights `c_0..c_N` (empty for the other kinds).
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// The stochastic factor `G~`, if not the identity.
    pub fn g_tilde(&self) -> Option<&CsrMatrix> {
        self.g_tilde.as_ref().map(|g| &g.0)
    }

    fn solve_k0(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let (_, lu) = self.k0.as_ref().expect("factorized");
        let mut out = x.to_owned();
        lu.solve_in_place(out.as_mut());
        out
    }

    /// `P^{-1} X`; the rank is unchanged.
    pub fn apply_inverse(&self, x: &LowRankMatrix) -> Result<LowRankMatrix> {
        self.check(x.nrows(), x.ncols())?;
        if self.kind == PreconditionerKind::None || x.rank() == 0 {
            return Ok(x.clone());
        }
        let w = self.solve_k0(x.w());
        let v = match &self.g_tilde {
            Some((_, lu)) => {
                let mut v = x.v().to_owned();
                lu.solve_in_place(v.as_mut());
                v
            }
            None => x.v().to_owned(),
        };
        LowRankMatrix::new(w, v)
    }

    /// `P X` in factored form.
    pub fn apply(&self, x: &LowRankMatrix) -> Result<LowRankMatrix> {
        self.check(x.nrows(), x.ncols())?;
        if self.kind == PreconditionerKind::None || x.rank() == 0 {
            return Ok(x.clone());
        }
        let (k0, _) = self.k0.as_ref().expect("factorized");
        let w = k0.mul_dense(x.w());
        let v = match &self.g_tilde {
            Some((g, _)) => g.transpose().mul_dense(x.v()),
            None => x.v().to_owned(),
        };
        LowRankMatrix::new(w, v)
    }

    /// `K_0^{-1} X G~^{-T}` for a dense `N_d x P` matrix.
    pub fn apply_inverse_dense(&self, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
        self.check(x.nrows(), x.ncols())?;
        if self.kind == PreconditionerKind::None {
            return Ok(x.to_owned());
        }
        let y = self.solve_k0(x);
        Ok(match &self.g_tilde {
            Some((_, lu)) => {
                let mut yt = y.transpose().to_owned();
                lu.solve_in_place(yt.as_mut());
                yt.transpose().to_owned()
            }
            None => y,
        })
    }

    fn check(&self, nrows: usize, ncols: usize) -> Result<()> {
        if let Some((k0, _)) = &self.k0 {
            if k0.nrows() != nrows {
                return arg(format!("preconditioner has {} spatial rows, argument {nrows}", k0.nrows()));
            }
        }
        if let Some((g, _)) = &self.g_tilde {
            if g.nrows() != ncols {
                return arg(format!("preconditioner has {} stochastic rows, argument {ncols}", g.nrows()));
            }
        }
        Ok(())
    }
}
