//! Low-rank BiCGstab with right preconditioning.
//!
//! Truncation follows the usual low-rank placement: after every update of
//! `Z`, `Z~`, `T`, `U`, `R`, `S`, `S~` and `V`. An iteration stopped by the
//! intermediate check on `Z` counts as half an iteration.

use super::{breaks_down, initial_residual, KrylovSpace, Outcome, SolverConfig, Termination, Tracker};
use crate::error::Result;

pub(crate) fn run<S: KrylovSpace>(space: &S, f: &S::Elem, cfg: &SolverConfig, x0: S::Elem) -> Result<Outcome<S::Elem>> {
    let mut tr = Tracker::new(space, f, cfg);
    let mut u = x0;
    let mut r = initial_residual(space, f, &u)?;
    let mut res = space.norm(&r);
    if res <= tr.threshold {
        let rel = tr.relative(res);
        return Ok(tr.finish(u, 0, 0.0, rel, Termination::Converged));
    }
    let r_tilde = r.clone();
    let mut rho = space.inner(&r_tilde, &r);
    let mut s = r.clone();
    let mut s_tilde = space.precondition_t(&s)?;
    let mut v = space.apply_t(&s_tilde)?;
    for k in 1..=cfg.maxit {
        let denom = space.inner(&r_tilde, &v);
        if breaks_down(denom) || breaks_down(rho) {
            let rel = tr.relative(res);
            return Ok(tr.finish(u, k - 1, (k - 1) as f64, rel, Termination::Breakdown));
        }
        let omega = space.inner(&r_tilde, &r) / denom;
        let z = space.combine_t(&[(1.0, &r), (-omega, &v)])?;
        let z_tilde = space.precondition_t(&z)?;
        let t = space.apply_t(&z_tilde)?;
        let znorm = space.norm(&z);
        if znorm <= tr.threshold {
            // The half step already solves the system; truncating keeps the
            // result within the rank bound.
            u = space.combine_t(&[(1.0, &u), (omega, &s_tilde)])?;
            tr.record(k, tr.relative(znorm), space.rank(&u));
            let rel = tr.relative(znorm);
            return Ok(tr.finish(u, k, k as f64 - 0.5, rel, Termination::Converged));
        }
        let tt = space.inner(&t, &t);
        if breaks_down(tt) {
            let rel = tr.relative(res);
            return Ok(tr.finish(u, k - 1, (k - 1) as f64, rel, Termination::Breakdown));
        }
        let xi = space.inner(&t, &z) / tt;
        u = space.combine_t(&[(1.0, &u), (omega, &s_tilde), (xi, &z_tilde)])?;
        let au = space.apply(&u)?;
        r = space.combine_t(&[(1.0, f), (-1.0, &au)])?;
        res = space.norm(&r);
        tr.record(k, tr.relative(res), space.rank(&u));
        if res <= tr.threshold {
            let rel = tr.relative(res);
            return Ok(tr.finish(u, k, k as f64, rel, Termination::Converged));
        }
        if k == cfg.maxit {
            break;
        }
        let rho_next = space.inner(&r_tilde, &r);
        if breaks_down(xi) {
            let rel = tr.relative(res);
            return Ok(tr.finish(u, k, k as f64, rel, Termination::Breakdown));
        }
        let beta = (rho_next / rho) * (omega / xi);
        rho = rho_next;
        s = space.combine_t(&[(1.0, &r), (beta, &s), (-beta * xi, &v)])?;
        s_tilde = space.precondition_t(&s)?;
        v = space.apply_t(&s_tilde)?;
    }
    let rel = tr.relative(res);
    Ok(tr.finish(u, cfg.maxit, cfg.maxit as f64, rel, Termination::Maxit))
}
