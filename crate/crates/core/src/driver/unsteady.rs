use super::benchmark::{build_system, BenchmarkSpec, Problem, SolverChoice, System};
use super::steady::solve_with;
use crate::error::{arg, Error, Result};
use crate::krylov::{SolveReport, SolverConfig};
use crate::lowrank::{axpy, inner, truncate, KroneckerOperator, LowRankMatrix};
use crate::sparse::CsrMatrix;

pub struct UnsteadySolution {
    pub system: System,
    /// `U^0, U^1, ..., U^nt`.
    pub steps: Vec<LowRankMatrix>,
    /// One report per time step.
    pub reports: Vec<SolveReport>,
    pub dt: f64,
}

/// `sqrt(sum_i u_i^T M u_i)`, the mean-square `L^2` norm of a chaos expansion.
pub fn l2_norm(mass: &CsrMatrix, u: &LowRankMatrix) -> Result<f64> {
    if mass.nrows() != u.nrows() {
        return arg("mass matrix and solution sizes differ");
    }
    let mu = LowRankMatrix::new(mass.mul_dense(u.w()), u.v().to_owned())?;
    Ok(inner(u, &mu)?.max(0.0).sqrt())
}

/// Backward Euler for `M du/dt + A(u) = F`:
///
/// ```text
/// (G_0 (x) (M + dt K_0) + sum_k G_k (x) dt K_k) u^{n+1} = (G_0 (x) M) u^n + dt F
/// ```
///
/// Each step starts the iteration from the previous solution.
pub fn backward_euler(
    system: &System,
    u0: LowRankMatrix,
    dt: f64,
    nt: usize,
    solver: SolverChoice,
    cfg: &SolverConfig,
) -> Result<(Vec<LowRankMatrix>, Vec<SolveReport>)> {
    if !(dt > 0.0) || nt == 0 {
        return arg("time stepping needs dt > 0 and nt >= 1");
    }
    let (nd, p) = (system.mesh.num_dofs(), system.basis.size());
    if u0.nrows() != nd || u0.ncols() != p {
        return arg(format!("initial value must be {nd}x{p}"));
    }
    let mass = &system.ops.mass;
    let terms = system
        .basis
        .g_mats
        .iter()
        .zip(&system.ops.k)
        .enumerate()
        .map(|(k, (g, kk))| {
            let spatial = if k == 0 { mass.linear_combination(1.0, kk, dt) } else { kk.scaled(dt) };
            (g.clone(), spatial)
        })
        .collect();
    let op = KroneckerOperator::new(terms)?;
    let forcing = system.rhs.scaled(dt);
    let mut steps = vec![u0];
    let mut reports = Vec::with_capacity(nt);
    for n in 0..nt {
        let prev = &steps[n];
        let mprev = LowRankMatrix::new(mass.mul_dense(prev.w()), prev.v().to_owned())?;
        let rhs = truncate(&axpy(1.0, &mprev, &forcing)?, cfg.eps_trunc)?;
        let (u, mut report) = solve_with(&op, &rhs, solver, cfg, Some(prev.clone()))
            .map_err(|e| Error::Step { step: n + 1, source: Box::new(e) })?;
        report.step = Some(n + 1);
        steps.push(u);
        reports.push(report);
    }
    Ok((steps, reports))
}

pub fn solve_unsteady(spec: &BenchmarkSpec) -> Result<UnsteadySolution> {
    if spec.problem != Problem::UnsteadyDiffusion {
        return arg("use solve_steady for stationary problems");
    }
    let system = build_system(spec)?;
    let dt = spec.t_final / spec.nt as f64;
    let u0 = LowRankMatrix::zeros(system.mesh.num_dofs(), system.basis.size());
    let (steps, reports) = backward_euler(&system, u0, dt, spec.nt, spec.solver, &spec.solver_config())?;
    Ok(UnsteadySolution { system, steps, reports, dt })
}
