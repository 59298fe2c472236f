use std::time::Instant;

use super::benchmark::{build_system, BenchmarkSpec, SolverChoice, System};
use crate::error::Result;
use crate::krylov::{full_direct, solve_low_rank, SolveReport, SolverConfig, Termination};
use crate::lowrank::{axpy, kron_apply, truncate, LowRankMatrix};
use crate::precond::Preconditioner;

pub struct SteadySolution {
    pub system: System,
    pub u: LowRankMatrix,
    pub report: SolveReport,
}

/// Solves `A(U) = F` with the chosen method. The direct path truncates the
/// LU solution to `eps_trunc`.
pub fn solve_system(
    system: &System,
    solver: SolverChoice,
    cfg: &SolverConfig,
    x0: Option<LowRankMatrix>,
) -> Result<(LowRankMatrix, SolveReport)> {
    solve_with(&system.op, &system.rhs, solver, cfg, x0)
}

pub(crate) fn solve_with(
    op: &crate::lowrank::KroneckerOperator,
    rhs: &LowRankMatrix,
    solver: SolverChoice,
    cfg: &SolverConfig,
    x0: Option<LowRankMatrix>,
) -> Result<(LowRankMatrix, SolveReport)> {
    match solver {
        SolverChoice::Krylov(method) => {
            let pc = Preconditioner::build(cfg.precond, op)?;
            solve_low_rank(op, &pc, rhs, &SolverConfig { method, ..*cfg }, x0)
        }
        SolverChoice::Direct => {
            let start = Instant::now();
            let dense = full_direct(op, &rhs.to_dense())?;
            let u = truncate(&LowRankMatrix::from_dense(dense.as_ref()), cfg.eps_trunc)?;
            let wall_time = start.elapsed().as_secs_f64();
            let fnorm = rhs.norm();
            let r = axpy(-1.0, &kron_apply(op, &u)?, rhs)?.norm();
            let rel = if fnorm > 0.0 { r / fnorm } else { r };
            let report = SolveReport {
                method: "direct".into(),
                iterations: 0,
                fractional_iterations: 0.0,
                rank: u.rank(),
                relative_residual: rel,
                iterated_residual: rel,
                wall_time,
                memory_kb: u.memory_kb(),
                termination: Termination::Converged,
                history: vec![],
                step: None,
            };
            Ok((u, report))
        }
    }
}

pub fn solve_steady(spec: &BenchmarkSpec) -> Result<SteadySolution> {
    if spec.problem == super::Problem::UnsteadyDiffusion {
        return crate::error::arg("use solve_unsteady for the transient problem");
    }
    let system = build_system(spec)?;
    let (u, report) = solve_system(&system, spec.solver, &spec.solver_config(), None)?;
    Ok(SteadySolution { system, u, report })
}
