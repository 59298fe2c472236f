//! The three benchmark problems and assembly of their Kronecker systems.

use std::sync::Arc;

use crate::chaos::{chaos_basis, ChaosBasis};
use crate::dg_assembly::{assemble_operators, PenaltyPlacement, ProblemData, SpatialOperators, DEFAULT_SIGMA};
use crate::error::{arg, Error, Result};
use crate::krylov::{Method, SolverConfig};
use crate::lowrank::{truncate, KroneckerOperator, LowRankMatrix};
use crate::mesh::{build_rect_mesh, Mesh, Point};
use crate::precond::PreconditionerKind;
use crate::random_field::{assemble_2d_eigenpairs, select_truncation, CovarianceSpec, KLExpansion, ScalarField};

/// Share of the covariance trace the unsteady benchmark keeps when `N` is
/// not given explicitly.
pub const VARIANCE_SHARE: f64 = 0.97;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// Random diffusion `a = nu eta` on `[-1,1]^2` with `b = (0,1)`; boundary
    /// layer at the top.
    SteadyDiffusion,
    /// Constant diffusion `nu` on `[0,1]^2` with a random velocity, linearized
    /// around `b = (1,0)`.
    SteadyConvection,
    /// Backward-Euler transient with random diffusion on `[0,1]^2`, `b = (1,1)`.
    UnsteadyDiffusion,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::SteadyDiffusion => "steady-diff",
            Problem::SteadyConvection => "steady-conv",
            Problem::UnsteadyDiffusion => "unsteady-diff",
        }
    }

    pub fn domain(self) -> [f64; 4] {
        match self {
            Problem::SteadyDiffusion => [-1.0, 1.0, -1.0, 1.0],
            _ => [0.0, 1.0, 0.0, 1.0],
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steady-diff" => Ok(Problem::SteadyDiffusion),
            "steady-conv" => Ok(Problem::SteadyConvection),
            "unsteady-diff" => Ok(Problem::UnsteadyDiffusion),
            _ => arg(format!("unknown problem '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    Krylov(Method),
    /// Sparse LU of the assembled global matrix.
    Direct,
}

impl std::str::FromStr for SolverChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "direct" {
            Ok(SolverChoice::Direct)
        } else {
            Ok(SolverChoice::Krylov(s.parse()?))
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkSpec {
    pub problem: Problem,
    pub nx: usize,
    pub ny: usize,
    /// KL truncation; chosen from the variance share when `None`.
    pub n: Option<usize>,
    pub q: usize,
    pub ell: f64,
    pub kappa: f64,
    pub nu: f64,
    pub sigma: f64,
    pub penalty: PenaltyPlacement,
    pub solver: SolverChoice,
    pub precond: PreconditionerKind,
    pub eps_trunc: f64,
    pub tol: f64,
    pub maxit: usize,
    pub t_final: f64,
    pub nt: usize,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn defaults(problem: Problem) -> Self {
        let base = Self {
            problem,
            nx: 32,
            ny: 32,
            n: Some(3),
            q: 3,
            ell: 1.0,
            kappa: 0.05,
            nu: 1e-4,
            sigma: DEFAULT_SIGMA,
            penalty: PenaltyPlacement::MeanOnly,
            solver: SolverChoice::Krylov(Method::Bicgstab),
            precond: PreconditionerKind::Mean,
            eps_trunc: 1e-6,
            tol: 1e-4,
            maxit: 100,
            t_final: 0.5,
            nt: 32,
            seed: 0,
        };
        match problem {
            Problem::SteadyDiffusion => base,
            Problem::SteadyConvection => Self { n: Some(7), ..base },
            Problem::UnsteadyDiffusion => Self { n: None, ell: 3.0, kappa: 0.15, nu: 1.0, ..base },
        }
    }

    pub fn domain(&self) -> [f64; 4] {
        self.problem.domain()
    }

    pub fn covariance(&self) -> CovarianceSpec {
        CovarianceSpec::isotropic(self.kappa, self.ell, self.domain())
    }

    /// The KL truncation, resolving the default through the variance share.
    pub fn truncation(&self) -> Result<usize> {
        match self.n {
            Some(n) => Ok(n),
            None => select_truncation(&self.covariance(), VARIANCE_SHARE),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let method = match self.solver {
            SolverChoice::Krylov(m) => m,
            SolverChoice::Direct => Method::Gmres,
        };
        SolverConfig::new(method, self.tol, self.eps_trunc, self.maxit, self.precond)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return arg("mesh resolution must be positive");
        }
        if self.n == Some(0) {
            return arg("KL truncation must be at least 1");
        }
        if !(self.nu > 0.0) {
            return arg(format!("viscosity must be positive, got {}", self.nu));
        }
        if !(self.sigma > 0.0) {
            return arg(format!("penalty must be positive, got {}", self.sigma));
        }
        if self.problem == Problem::UnsteadyDiffusion && (self.nt == 0 || !(self.t_final > 0.0)) {
            return arg("unsteady runs need T > 0 and at least one step");
        }
        if matches!(self.solver, SolverChoice::Krylov(_)) {
            self.solver_config().validate()?;
        }
        Ok(())
    }
}

fn on(v: f64, target: f64) -> bool {
    (v - target).abs() <= 1e-10 * (1.0 + target.abs())
}

fn modes(kl: &KLExpansion, factor: f64) -> Vec<ScalarField> {
    (0..kl.len())
        .map(|k| {
            let kl = kl.clone();
            Arc::new(move |p: Point| factor * kl.scaled_mode(k, p)) as ScalarField
        })
        .collect()
}

/// Mesh, KL expansion and coefficient data of a benchmark.
pub fn problem_data(spec: &BenchmarkSpec) -> Result<(Mesh, KLExpansion, ProblemData)> {
    spec.validate()?;
    let [x0, x1, y0, y1] = spec.domain();
    let mesh = build_rect_mesh(x0, x1, y0, y1, spec.nx, spec.ny)?;
    let kl = assemble_2d_eigenpairs(&spec.covariance(), spec.truncation()?)?;
    let nu = spec.nu;
    let zero: ScalarField = Arc::new(|_| 0.0);
    let data = match spec.problem {
        Problem::SteadyDiffusion => ProblemData {
            mean_diffusion: Arc::new(move |_| nu),
            diffusion_modes: modes(&kl, nu),
            mean_velocity: Arc::new(|_| [0.0, 1.0]),
            velocity_modes: vec![],
            source: zero,
            dirichlet: Arc::new(move |p: Point| {
                if on(p[1], y0) {
                    p[0]
                } else if on(p[1], y1) {
                    0.0
                } else if on(p[0], x0) {
                    -1.0
                } else {
                    1.0
                }
            }),
            sigma: spec.sigma,
            penalty: spec.penalty,
        },
        Problem::SteadyConvection => ProblemData {
            mean_diffusion: Arc::new(move |_| nu),
            diffusion_modes: vec![],
            mean_velocity: Arc::new(|_| [1.0, 0.0]),
            // First-order expansion of (cos(eta/5), sin(eta/5)) around eta = 0.
            velocity_modes: (0..kl.len())
                .map(|k| {
                    let kl = kl.clone();
                    Arc::new(move |p: Point| [0.0, kl.scaled_mode(k, p) / 5.0]) as crate::dg_assembly::VectorField
                })
                .collect(),
            source: zero,
            dirichlet: Arc::new(move |p: Point| {
                let on_s = on(p[1], y0) || ((on(p[0], x0) || on(p[0], x1)) && p[1] <= 0.5);
                if on_s {
                    1.0
                } else {
                    0.0
                }
            }),
            sigma: spec.sigma,
            penalty: spec.penalty,
        },
        Problem::UnsteadyDiffusion => ProblemData {
            mean_diffusion: Arc::new(move |_| nu),
            diffusion_modes: modes(&kl, nu),
            mean_velocity: Arc::new(|_| [1.0, 1.0]),
            velocity_modes: vec![],
            source: zero,
            dirichlet: Arc::new(move |p: Point| if on(p[0], x0) { p[1] * (1.0 - p[1]) } else { 0.0 }),
            sigma: spec.sigma,
            penalty: spec.penalty,
        },
    };
    Ok((mesh, kl, data))
}

/// Everything needed to solve one stochastic Galerkin system.
pub struct System {
    pub mesh: Mesh,
    pub basis: ChaosBasis,
    pub data: ProblemData,
    pub ops: SpatialOperators,
    pub op: KroneckerOperator,
    /// `F = sum_i f_i g_i^T` in factored form.
    pub rhs: LowRankMatrix,
}

/// Assembles `sum_k G_k (x) K_k` and `sum_i g_i (x) f_i` for given data.
pub fn assemble_system(mesh: Mesh, data: ProblemData, q: usize, eps_trunc: f64) -> Result<System> {
    let basis = chaos_basis(data.num_modes().max(1), q)?;
    if data.num_modes() == 0 {
        return arg("the stochastic problem needs at least one mode");
    }
    let ops = assemble_operators(&mesh, &data)?;
    let terms = basis.g_mats.iter().cloned().zip(ops.k.iter().cloned()).collect();
    let op = KroneckerOperator::new(terms)?;
    let nd = mesh.num_dofs();
    let p = basis.size();
    let w = faer::Mat::from_fn(nd, ops.f.len(), |i, j| ops.f[j][i]);
    let v = faer::Mat::from_fn(p, basis.g_vecs.len(), |i, j| basis.g_vecs[j][i]);
    let rhs = truncate(&LowRankMatrix::new(w, v)?, eps_trunc)?;
    Ok(System { mesh, basis, data, ops, op, rhs })
}

pub fn build_system(spec: &BenchmarkSpec) -> Result<System> {
    let (mesh, _, data) = problem_data(spec)?;
    assemble_system(mesh, data, spec.q, spec.eps_trunc.min(1e-12))
}
