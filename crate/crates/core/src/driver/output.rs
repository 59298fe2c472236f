//! CSV writers. Floats carry 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::convergence::ConvergenceRow;
use super::moments::MomentFields;
use super::monte_carlo::MonteCarloResult;
use crate::error::Result;
use crate::krylov::SolveReport;

/// `x` with 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn moments_csv(m: &MomentFields) -> String {
    let mut s = String::from("x,y,mean,variance\n");
    for ((p, mean), var) in m.coords.iter().zip(&m.mean).zip(&m.variance) {
        let _ = writeln!(s, "{},{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*mean), fmt17(*var));
    }
    s
}

/// Standard errors of Monte Carlo moments per node.
pub fn std_errors_csv(mc: &MonteCarloResult) -> String {
    let m = &mc.moments;
    let mut s = String::from("x,y,mean_std_error,variance_std_error\n");
    for i in 0..m.mean.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt17(m.coords[i][0]),
            fmt17(m.coords[i][1]),
            fmt17(mc.mean_std_error[i]),
            fmt17(mc.variance_std_error[i])
        );
    }
    s
}

/// One row per iteration; unsteady runs get a leading `step` column.
pub fn history_csv(reports: &[SolveReport]) -> String {
    let stepped = reports.iter().any(|r| r.step.is_some());
    let mut s = String::from(if stepped { "step,iteration,relative_residual,rank\n" } else { "iteration,relative_residual,rank\n" });
    for r in reports {
        for h in &r.history {
            if stepped {
                let _ = write!(s, "{},", r.step.unwrap_or(0));
            }
            let _ = writeln!(s, "{},{},{}", h.iteration, fmt17(h.relative_residual), h.rank);
        }
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("nx,h,energy_error,rate\n");
    for r in rows {
        let rate = r.rate.map(fmt17).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{}", r.nx, fmt17(r.h), fmt17(r.error), rate);
    }
    s
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}
