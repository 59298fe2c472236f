//! Low-rank preconditioned conjugate gradients with the residual recomputed
//! from the truncated iterate in every step.

use super::{breaks_down, initial_residual, KrylovSpace, Outcome, SolverConfig, Termination, Tracker};
use crate::error::Result;

pub(crate) fn run<S: KrylovSpace>(space: &S, f: &S::Elem, cfg: &SolverConfig, x0: S::Elem) -> Result<Outcome<S::Elem>> {
    let mut tr = Tracker::new(space, f, cfg);
    let mut x = x0;
    let mut r = initial_residual(space, f, &x)?;
    let mut res = space.norm(&r);
    if res <= tr.threshold {
        let rel = tr.relative(res);
        return Ok(tr.finish(x, 0, 0.0, rel, Termination::Converged));
    }
    let z = space.precondition_t(&r)?;
    let mut p = z;
    let mut q = space.apply_t(&p)?;
    let mut xi = space.inner(&p, &q);
    for k in 1..=cfg.maxit {
        if breaks_down(xi) {
            let rel = tr.relative(res);
            return Ok(tr.finish(x, k - 1, (k - 1) as f64, rel, Termination::Breakdown));
        }
        let omega = space.inner(&r, &p) / xi;
        x = space.combine_t(&[(1.0, &x), (omega, &p)])?;
        let ax = space.apply(&x)?;
        r = space.combine_t(&[(1.0, f), (-1.0, &ax)])?;
        res = space.norm(&r);
        tr.record(k, tr.relative(res), space.rank(&x));
        if res <= tr.threshold {
            let rel = tr.relative(res);
            return Ok(tr.finish(x, k, k as f64, rel, Termination::Converged));
        }
        if k == cfg.maxit {
            break;
        }
        let z = space.precondition_t(&r)?;
        let beta = -space.inner(&z, &q) / xi;
        p = space.combine_t(&[(1.0, &z), (beta, &p)])?;
        q = space.apply_t(&p)?;
        xi = space.inner(&p, &q);
    }
    let rel = tr.relative(res);
    Ok(tr.finish(x, cfg.maxit, cfg.maxit as f64, rel, Termination::Maxit))
}
