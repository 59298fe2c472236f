use std::f64::consts::PI;
use std::sync::Arc;

use super::benchmark::assemble_system;
use crate::chaos::eval_multi;
use crate::dg_assembly::{energy_error, solve_deterministic, ExactSolution, ProblemData};
use crate::error::{arg, Result};
use crate::krylov::full_direct;
use crate::mesh::{build_rect_mesh, Point};
use crate::quadrature::gauss_legendre_on;

type Value = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Deterministic problem on a rectangle with a known solution.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub domain: [f64; 4],
    pub data: ProblemData,
    pub value: Value,
    pub gradient: Gradient,
}

impl ManufacturedProblem {
    /// `-lap u = 2 pi^2 u` with `u = sin(pi x) sin(pi y)` on the unit square.
    pub fn poisson_sine() -> Self {
        let value: Value = Arc::new(|p: Point| (PI * p[0]).sin() * (PI * p[1]).sin());
        let gradient: Gradient = Arc::new(|p: Point| {
            [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()]
        });
        let v = value.clone();
        let data = ProblemData::deterministic(1.0, [0.0, 0.0], Arc::new(move |p| 2.0 * PI * PI * v(p)), Arc::new(|_| 0.0));
        Self { domain: [0.0, 1.0, 0.0, 1.0], data, value, gradient }
    }

    /// Constant solution `u = c`, reproduced exactly by the discrete space.
    pub fn constant(c: f64, velocity: [f64; 2]) -> Self {
        let data = ProblemData::deterministic(1.0, velocity, Arc::new(|_| 0.0), Arc::new(move |_| c));
        Self {
            domain: [0.0, 1.0, 0.0, 1.0],
            data,
            value: Arc::new(move |_| c),
            gradient: Arc::new(|_| [0.0, 0.0]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub h: f64,
    pub error: f64,
    /// `log2` rate against the previous row.
    pub rate: Option<f64>,
}

/// Energy-norm errors on uniform `nx x nx` meshes.
pub fn convergence_study(problem: &ManufacturedProblem, resolutions: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let [x0, x1, y0, y1] = problem.domain;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(resolutions.len());
    for &nx in resolutions {
        let mesh = build_rect_mesh(x0, x1, y0, y1, nx, nx)?;
        let uh = solve_deterministic(&mesh, &problem.data)?;
        let exact = ExactSolution { value: &*problem.value, gradient: &*problem.gradient };
        let error = energy_error(&mesh, &problem.data, &uh, &exact);
        let h = mesh.h();
        let rate = rows.last().map(|prev| (prev.error / error).ln() / (prev.h / h).ln());
        rows.push(ConvergenceRow { nx, h, error, rate });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StochasticRow {
    pub q: usize,
    pub error: f64,
}

/// Stochastic-degree study for `-div((1 + kappa xi) grad u) = 2 pi^2 sin sin`
/// with one parameter. The exact solution is `sin(pi x) sin(pi y) / (1 + kappa xi)`.
/// Errors are `(int ||u(xi) - u_h(xi)||_e^2 rho dxi)^{1/2}` by 20-point Gauss
/// quadrature in `xi`.
pub fn stochastic_convergence(nx: usize, kappa: f64, degrees: &[usize]) -> Result<Vec<StochasticRow>> {
    let s3 = 3f64.sqrt();
    if !(kappa.abs() * s3 < 1.0) {
        return arg("kappa must keep 1 + kappa xi positive");
    }
    let base = ManufacturedProblem::poisson_sine();
    let mut data = base.data.clone();
    data.diffusion_modes = vec![Arc::new(move |_| kappa)];
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, nx, nx)?;
    let (nodes, weights) = gauss_legendre_on(20, -s3, s3);
    let mut rows = Vec::with_capacity(degrees.len());
    for &q in degrees {
        let system = assemble_system(mesh.clone(), data.clone(), q, 1e-14)?;
        let u = full_direct(&system.op, &system.rhs.to_dense())?;
        let mut sum = 0.0;
        for (&xi, &w) in nodes.iter().zip(&weights) {
            let psi: Vec<f64> = system.basis.set.indices.iter().map(|a| eval_multi(a, &[xi])).collect();
            let uh: Vec<f64> = (0..u.nrows()).map(|i| (0..u.ncols()).map(|j| u[(i, j)] * psi[j]).sum()).collect();
            let realized = data.realization(&[xi])?;
            let scale = 1.0 / (1.0 + kappa * xi);
            let value = |p: Point| scale * (base.value)(p);
            let gradient = |p: Point| {
                let g = (base.gradient)(p);
                [scale * g[0], scale * g[1]]
            };
            let e = energy_error(&mesh, &realized, &uh, &ExactSolution { value: &value, gradient: &gradient });
            sum += w / (2.0 * s3) * e * e;
        }
        rows.push(StochasticRow { q, error: sum.sqrt() });
    }
    Ok(rows)
}
