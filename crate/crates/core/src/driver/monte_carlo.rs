use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::benchmark::{problem_data, BenchmarkSpec};
use super::moments::{dof_coordinates, MomentFields};
use crate::dg_assembly::{solve_deterministic, ProblemData};
use crate::error::{arg, Error, Result};
use crate::exec;
use crate::mesh::Mesh;

/// Sample moments with their standard errors.
#[derive(Clone, Debug)]
pub struct MonteCarloResult {
    /// Sample mean and unbiased (`n - 1`) sample variance per node.
    pub moments: MomentFields,
    /// Samples that entered the estimates.
    pub samples: usize,
    /// Draws whose deterministic system could not be solved.
    pub skipped: usize,
    pub mean_std_error: Vec<f64>,
    pub variance_std_error: Vec<f64>,
    /// False when fewer than two samples were used; the variance is then
    /// reported as zero.
    pub variance_defined: bool,
}

/// Draw `i` of the parameter vector, uniform on `(-sqrt 3, sqrt 3)^n`.
/// Each sample has its own ChaCha stream, so results do not depend on the
/// execution order.
pub fn sample_xi(seed: u64, i: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let s = 3f64.sqrt();
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}

/// Monte Carlo moments from deterministic solves at i.i.d. draws.
pub fn monte_carlo(mesh: &Mesh, data: &ProblemData, samples: usize, seed: u64) -> Result<MonteCarloResult> {
    if samples == 0 {
        return arg("Monte Carlo needs at least one sample");
    }
    data.validate(mesh)?;
    let n = data.num_modes();
    let runs: Vec<Result<Vec<f64>>> = exec::map_range(samples, |i| {
        let realized = data.realization(&sample_xi(seed, i, n))?;
        exec::with_mode(exec::Mode::Sequential, || solve_deterministic(mesh, &realized))
    });
    let mut solutions = Vec::with_capacity(samples);
    let mut skipped = 0;
    for run in runs {
        match run {
            Ok(u) => solutions.push(u),
            Err(Error::Solver(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let m = solutions.len();
    if m == 0 {
        return Err(Error::Solver("every Monte Carlo sample was singular".into()));
    }
    let nd = mesh.num_dofs();
    let mf = m as f64;
    let mut mean = vec![0.0; nd];
    for u in &solutions {
        mean.iter_mut().zip(u).for_each(|(a, b)| *a += b / mf);
    }
    let (mut m2, mut m4) = (vec![0.0; nd], vec![0.0; nd]);
    for u in &solutions {
        for i in 0..nd {
            let d = u[i] - mean[i];
            m2[i] += d * d / mf;
            m4[i] += d.powi(4) / mf;
        }
    }
    let defined = m > 1;
    let variance: Vec<f64> = if defined { m2.iter().map(|v| v * mf / (mf - 1.0)).collect() } else { vec![0.0; nd] };
    let mean_std_error = variance.iter().map(|v| (v / mf).sqrt()).collect();
    let variance_std_error = if defined {
        (0..nd)
            .map(|i| {
                let s4 = variance[i] * variance[i];
                ((m4[i] - (mf - 3.0) / (mf - 1.0) * s4) / mf).max(0.0).sqrt()
            })
            .collect()
    } else {
        vec![0.0; nd]
    };
    Ok(MonteCarloResult {
        moments: MomentFields { coords: dof_coordinates(mesh), mean, variance },
        samples: m,
        skipped,
        mean_std_error,
        variance_std_error,
        variance_defined: defined,
    })
}

/// Monte Carlo reference for a steady benchmark.
pub fn monte_carlo_reference(spec: &BenchmarkSpec, samples: usize, seed: u64) -> Result<MonteCarloResult> {
    if spec.problem == super::Problem::UnsteadyDiffusion {
        return arg("the Monte Carlo oracle covers the steady problems only");
    }
    let (mesh, _, data) = problem_data(spec)?;
    monte_carlo(&mesh, &data, samples, seed)
}
