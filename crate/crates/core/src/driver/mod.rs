//! Problem orchestration: benchmark setups, steady and backward-Euler
//! solves, moment extraction, Monte Carlo and convergence oracles, and CSV
//! output.

mod benchmark;
mod convergence;
mod moments;
mod monte_carlo;
pub mod output;
mod steady;
mod unsteady;

pub use benchmark::{assemble_system, build_system, problem_data, BenchmarkSpec, Problem, SolverChoice, System};
pub use convergence::{
    convergence_study, stochastic_convergence, ConvergenceRow, ManufacturedProblem, StochasticRow,
};
pub use moments::{compute_moments, dof_coordinates, MomentFields};
pub use monte_carlo::{monte_carlo, monte_carlo_reference, sample_xi, MonteCarloResult};
pub use steady::{solve_steady, solve_system, SteadySolution};
pub use unsteady::{backward_euler, l2_norm, solve_unsteady, UnsteadySolution};
