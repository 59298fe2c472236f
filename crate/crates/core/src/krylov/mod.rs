//! Preconditioned Krylov solvers for `sum_k G_k (x) K_k`.
//!
//! Each method is written once against [`KrylovSpace`]. The low-rank space
//! truncates iterates to `W V^T` form at the marked steps; the dense space
//! never truncates and yields the classical full-rank methods.

mod bicgstab;
mod cg;
mod gmres;
mod qmrcgstab;
mod space;

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::lowrank::{KroneckerOperator, LowRankMatrix};
use crate::precond::{Preconditioner, PreconditionerKind};

pub use space::{DenseSpace, KrylovSpace, LowRankSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Bicgstab,
    Qmrcgstab,
    Gmres,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cg, Method::Bicgstab, Method::Qmrcgstab, Method::Gmres];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cg => "cg",
            Method::Bicgstab => "bicgstab",
            Method::Qmrcgstab => "qmrcgstab",
            Method::Gmres => "gmres",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(Method::Cg),
            "bicgstab" => Ok(Method::Bicgstab),
            "qmrcgstab" => Ok(Method::Qmrcgstab),
            "gmres" => Ok(Method::Gmres),
            _ => arg(format!("unknown Krylov method '{s}'")),
        }
    }
}

/// Largest Krylov basis GMRES may build (it never restarts).
pub const GMRES_MAX_BASIS: usize = 100;

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub method: Method,
    /// Stop when `||F - A(U)|| <= tol ||F||`.
    pub tol: f64,
    /// Relative singular value cutoff of the truncation.
    pub eps_trunc: f64,
    pub maxit: usize,
    pub precond: PreconditionerKind,
}

impl SolverConfig {
    pub fn new(method: Method, tol: f64, eps_trunc: f64, maxit: usize, precond: PreconditionerKind) -> Self {
        Self { method, tol, eps_trunc, maxit, precond }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.eps_trunc > 0.0) {
            return arg("tolerances must be positive");
        }
        if self.eps_trunc > self.tol {
            return arg(format!("truncation tolerance {} exceeds solver tolerance {}", self.eps_trunc, self.tol));
        }
        if self.maxit == 0 {
            return arg("maxit must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Converged,
    Maxit,
    Breakdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub relative_residual: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: String,
    /// Completed outer iterations, counting a final partial one.
    pub iterations: usize,
    /// Iterations with half-step accounting for the BiCGstab family.
    pub fractional_iterations: f64,
    pub rank: usize,
    /// `||F - A(U)|| / ||F||`, recomputed from the returned solution.
    pub relative_residual: f64,
    /// Residual estimate the iteration stopped on.
    pub iterated_residual: f64,
    pub wall_time: f64,
    pub memory_kb: f64,
    pub termination: Termination,
    /// One entry per iteration. The quasi-minimal residual method records
    /// its monotone quasi-residual bound `tau_k / tau_0`.
    pub history: Vec<HistoryEntry>,
    /// Time step index for unsteady runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Raw outcome of a solver loop before the final residual check.
pub(crate) struct Outcome<E> {
    pub x: E,
    pub iterations: usize,
    pub fractional: f64,
    pub iterated: f64,
    pub termination: Termination,
    pub history: Vec<HistoryEntry>,
}


/// Runs `cfg.method` in `space` from `x0` (zero if absent).
pub fn solve_in<S: KrylovSpace>(space: &S, f: &S::Elem, cfg: &SolverConfig, x0: Option<S::Elem>) -> Result<(S::Elem, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let x0 = x0.unwrap_or_else(|| space.zero());
    let out = match cfg.method {
        Method::Cg => cg::run(space, f, cfg, x0)?,
        Method::Bicgstab => bicgstab::run(space, f, cfg, x0)?,
        Method::Qmrcgstab => qmrcgstab::run(space, f, cfg, x0)?,
        Method::Gmres => gmres::run(space, f, cfg, x0)?,
    };
    let wall_time = start.elapsed().as_secs_f64();
    let fnorm = space.norm(f);
    let residual = space.residual_norm(&out.x, f)?;
    let relative_residual = if fnorm > 0.0 { residual / fnorm } else { residual };
    let report = SolveReport {
        method: cfg.method.name().to_string(),
        iterations: out.iterations,
        fractional_iterations: out.fractional,
        rank: space.rank(&out.x),
        relative_residual,
        iterated_residual: out.iterated,
        wall_time,
        memory_kb: space.memory_kb(&out.x),
        termination: out.termination,
        history: out.history,
        step: None,
    };
    Ok((out.x, report))
}

/// Low-rank preconditioned solve of `A(U) = F`.
pub fn solve_low_rank(
    op: &KroneckerOperator,
    pc: &Preconditioner,
    f: &LowRankMatrix,
    cfg: &SolverConfig,
    x0: Option<LowRankMatrix>,
) -> Result<(LowRankMatrix, SolveReport)> {
    let space = LowRankSpace::new(op, pc, cfg.eps_trunc)?;
    solve_in(&space, f, cfg, x0)
}

pub fn lr_cg(op: &KroneckerOperator, pc: &Preconditioner, f: &LowRankMatrix, cfg: &SolverConfig) -> Result<(LowRankMatrix, SolveReport)> {
    solve_low_rank(op, pc, f, &SolverConfig { method: Method::Cg, ..*cfg }, None)
}

pub fn lr_bicgstab(op: &KroneckerOperator, pc: &Preconditioner, f: &LowRankMatrix, cfg: &SolverConfig) -> Result<(LowRankMatrix, SolveReport)> {
    solve_low_rank(op, pc, f, &SolverConfig { method: Method::Bicgstab, ..*cfg }, None)
}

pub fn lr_qmrcgstab(op: &KroneckerOperator, pc: &Preconditioner, f: &LowRankMatrix, cfg: &SolverConfig) -> Result<(LowRankMatrix, SolveReport)> {
    solve_low_rank(op, pc, f, &SolverConfig { method: Method::Qmrcgstab, ..*cfg }, None)
}

pub fn lr_gmres(op: &KroneckerOperator, pc: &Preconditioner, f: &LowRankMatrix, cfg: &SolverConfig) -> Result<(LowRankMatrix, SolveReport)> {
    solve_low_rank(op, pc, f, &SolverConfig { method: Method::Gmres, ..*cfg }, None)
}

/// Full-rank preconditioned iteration on dense `N_d x P` matrices.
pub fn full_iterative(op: &KroneckerOperator, pc: &Preconditioner, f: &Mat<f64>, cfg: &SolverConfig) -> Result<(Mat<f64>, SolveReport)> {
    let space = DenseSpace::new(op, pc)?;
    solve_in(&space, f, cfg, None)
}

/// Assembles `sum_k G_k (x) K_k` as one sparse matrix and solves by LU.
pub fn full_direct(op: &KroneckerOperator, f: &Mat<f64>) -> Result<Mat<f64>> {
    let (nd, p) = (op.nd(), op.p());
    if f.nrows() != nd || f.ncols() != p {
        return arg(format!("right-hand side must be {nd}x{p}"));
    }
    let a = op.assemble_global();
    let lu = a.to_faer()?.sp_lu().map_err(|e| Error::Solver(format!("global sparse LU failed: {e:?}")))?;
    let mut x = Mat::from_fn(nd * p, 1, |i, _| f[(i % nd, i / nd)]);
    lu.solve_in_place(x.as_mut());
    let u = Mat::from_fn(nd, p, |i, j| x[(j * nd + i, 0)]);
    if u.norm_l2().is_finite() {
        Ok(u)
    } else {
        Err(Error::Solver("global system is singular".into()))
    }
}

/// True when a denominator makes the recurrence undefined.
pub(crate) fn breaks_down(value: f64) -> bool {
    value == 0.0 || !value.is_finite()
}

/// Shared bookkeeping: stopping threshold and residual history.
pub(crate) struct Tracker {
    fnorm: f64,
    pub threshold: f64,
    pub history: Vec<HistoryEntry>,
}

impl Tracker {
    pub fn new<S: KrylovSpace>(space: &S, f: &S::Elem, cfg: &SolverConfig) -> Self {
        let fnorm = space.norm(f);
        Self { fnorm, threshold: cfg.tol * fnorm, history: Vec::new() }
    }

    pub fn relative(&self, residual: f64) -> f64 {
        if self.fnorm > 0.0 {
            residual / self.fnorm
        } else {
            residual
        }
    }

    pub fn record(&mut self, iteration: usize, relative_residual: f64, rank: usize) {
        self.history.push(HistoryEntry { iteration, relative_residual, rank });
    }

    pub fn finish<E>(self, x: E, iterations: usize, fractional: f64, iterated: f64, termination: Termination) -> Outcome<E> {
        Outcome { x, iterations, fractional, iterated, termination, history: self.history }
    }
}

/// `T(F - A(x0))`, or `F` itself for a zero start.
pub(crate) fn initial_residual<S: KrylovSpace>(space: &S, f: &S::Elem, x0: &S::Elem) -> Result<S::Elem> {
    if space.norm(x0) == 0.0 {
        return Ok(f.clone());
    }
    let ax = space.apply(x0)?;
    space.combine_t(&[(1.0, f), (-1.0, &ax)])
}
