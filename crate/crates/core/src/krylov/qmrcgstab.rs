//! Low-rank QMRCGstab with left preconditioning.
//!
//! Each outer iteration performs two quasi-minimization half steps. The
//! quasi-residual bound `sqrt(k+1) tau / tau_0` is measured on the
//! preconditioned residual, so a candidate that passes it is confirmed
//! against the true residual `||F - A(U)|| <= tol ||F||` before stopping.

use super::{breaks_down, initial_residual, KrylovSpace, Outcome, SolverConfig, Termination, Tracker};
use crate::error::Result;

pub(crate) fn run<S: KrylovSpace>(space: &S, f: &S::Elem, cfg: &SolverConfig, x0: S::Elem) -> Result<Outcome<S::Elem>> {
    let mut tr = Tracker::new(space, f, cfg);
    let mut u = x0;
    let r0 = initial_residual(space, f, &u)?;
    let res0 = space.norm(&r0);
    if res0 <= tr.threshold {
        let rel = tr.relative(res0);
        return Ok(tr.finish(u, 0, 0.0, rel, Termination::Converged));
    }
    let mut z = space.precondition_t(&r0)?;
    let mut r_tilde = r0;
    if space.inner(&z, &r_tilde) == 0.0 {
        r_tilde = z.clone();
    }
    let mut y = space.zero();
    let mut v = space.zero();
    let mut d = space.zero();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut tau = space.norm(&z);
    let tau0 = tau;
    let (mut theta, mut eta) = (0.0, 0.0);
    let mut last_true = tr.relative(res0);

    // Confirms a candidate against the true residual.
    let confirm = |x: &S::Elem, tr: &Tracker| -> Result<(bool, f64)> {
        let res = space.residual_norm(x, f)?;
        Ok((res <= tr.threshold, tr.relative(res)))
    };

    for k in 1..=cfg.maxit {
        let kf = k as f64;
        let rho_next = space.inner(&z, &r_tilde);
        if breaks_down(rho) || breaks_down(omega) {
            return Ok(tr.finish(u, k - 1, (k - 1) as f64, last_true, Termination::Breakdown));
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        y = space.combine_t(&[(1.0, &z), (beta, &y), (-beta * omega, &v)])?;
        let y_hat = space.apply_t(&y)?;
        // A small search image only ends the run if the current iterate
        // passes the true residual test. The smoothed iterate can lag the
        // preconditioned residual, so otherwise the next step catches up.
        let y_norm = space.norm(&y_hat);
        if y_norm <= tr.threshold {
            let (ok, rel) = confirm(&u, &tr)?;
            last_true = rel;
            if ok || y_norm == 0.0 {
                tr.record(k, tau / tau0, space.rank(&u));
                let why = if ok { Termination::Converged } else { Termination::Breakdown };
                return Ok(tr.finish(u, k, kf - 1.0, rel, why));
            }
        }
        v = space.precondition_t(&y_hat)?;
        let vr = space.inner(&v, &r_tilde);
        if breaks_down(vr) {
            return Ok(tr.finish(u, k - 1, (k - 1) as f64, last_true, Termination::Breakdown));
        }
        alpha = rho / vr;
        let s = space.combine_t(&[(1.0, &z), (-alpha, &v)])?;

        // First quasi-minimization.
        let theta_t = space.norm(&s) / tau;
        let c = 1.0 / (1.0 + theta_t * theta_t).sqrt();
        let tau_t = tau * theta_t * c;
        let eta_t = c * c * alpha;
        let d_t = space.combine_t(&[(1.0, &y), (theta * theta * eta / alpha, &d)])?;
        let u_t = space.combine_t(&[(1.0, &u), (eta_t, &d_t)])?;
        if (kf + 1.0).sqrt() * tau_t / tau0 <= cfg.tol || tau_t == 0.0 {
            let (ok, rel) = confirm(&u_t, &tr)?;
            last_true = rel;
            if ok {
                tr.record(k, tau_t / tau0, space.rank(&u_t));
                return Ok(tr.finish(u_t, k, kf - 0.5, rel, Termination::Converged));
            }
        }

        let s_hat = space.apply_t(&s)?;
        let t = space.precondition_t(&s_hat)?;
        let tt = space.inner(&t, &t);
        if breaks_down(tt) || breaks_down(tau_t) {
            tr.record(k, tau_t / tau0, space.rank(&u_t));
            return Ok(tr.finish(u_t, k, kf - 0.5, last_true, Termination::Breakdown));
        }
        omega = space.inner(&s, &t) / tt;
        z = space.combine(&[(1.0, &s), (-omega, &t)])?;

        // Second quasi-minimization.
        theta = space.norm(&z) / tau_t;
        let c = 1.0 / (1.0 + theta * theta).sqrt();
        tau = tau_t * theta * c;
        eta = c * c * omega;
        if breaks_down(omega) {
            tr.record(k, tau_t / tau0, space.rank(&u_t));
            return Ok(tr.finish(u_t, k, kf - 0.5, last_true, Termination::Breakdown));
        }
        d = space.combine_t(&[(1.0, &s), (theta_t * theta_t * eta_t / omega, &d_t)])?;
        u = space.combine_t(&[(1.0, &u_t), (eta, &d)])?;
        tr.record(k, tau / tau0, space.rank(&u));
        if (kf + 1.0).sqrt() * tau / tau0 <= cfg.tol || tau == 0.0 {
            let (ok, rel) = confirm(&u, &tr)?;
            last_true = rel;
            if ok {
                return Ok(tr.finish(u, k, kf, rel, Termination::Converged));
            }
        }
    }
    let (_, rel) = confirm(&u, &tr)?;
    Ok(tr.finish(u, cfg.maxit, cfg.maxit as f64, rel, Termination::Maxit))
}
