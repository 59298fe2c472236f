//! Low-rank right-preconditioned GMRES without restarts.
//!
//! Arnoldi with modified Gram-Schmidt, the new direction truncated after
//! every projection, and Givens rotations for the least-squares problem.
//! The solution `U_0 + P^{-1}(sum_i y_i V_i)` is formed only at the end.

use super::{initial_residual, KrylovSpace, Outcome, SolverConfig, Termination, Tracker, GMRES_MAX_BASIS};
use crate::error::Result;

pub(crate) fn run<S: KrylovSpace>(space: &S, f: &S::Elem, cfg: &SolverConfig, x0: S::Elem) -> Result<Outcome<S::Elem>> {
    let mut tr = Tracker::new(space, f, cfg);
    let r0 = initial_residual(space, f, &x0)?;
    let beta = space.norm(&r0);
    if beta <= tr.threshold {
        let rel = tr.relative(beta);
        return Ok(tr.finish(x0, 0, 0.0, rel, Termination::Converged));
    }
    let maxit = cfg.maxit.min(GMRES_MAX_BASIS);
    let mut basis = vec![space.combine(&[(1.0 / beta, &r0)])?];
    // Column k of the Hessenberg matrix is h[k] (length k + 2).
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(maxit);
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    let mut steps = 0;
    let mut termination = Termination::Maxit;
    for k in 0..maxit {
        let z = space.precondition_t(&basis[k])?;
        let mut w = space.apply_t(&z)?;
        let mut col = vec![0.0; k + 2];
        for (i, vi) in basis.iter().enumerate() {
            col[i] = space.inner(&w, vi);
            w = space.combine_t(&[(1.0, &w), (-col[i], vi)])?;
        }
        col[k + 1] = space.norm(&w);
        let h_next = col[k + 1];
        for i in 0..k {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = cs[i] * a + sn[i] * b;
            col[i + 1] = -sn[i] * a + cs[i] * b;
        }
        let denom = col[k].hypot(col[k + 1]);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[k] / denom, col[k + 1] / denom) };
        cs.push(c);
        sn.push(s);
        col[k] = c * col[k] + s * col[k + 1];
        col[k + 1] = 0.0;
        g.push(-s * g[k]);
        g[k] *= c;
        h.push(col);
        steps = k + 1;
        let estimate = g[k + 1].abs();
        tr.record(steps, tr.relative(estimate), space.rank(&w));
        if estimate <= tr.threshold {
            termination = Termination::Converged;
            break;
        }
        if h_next == 0.0 || !h_next.is_finite() {
            // Invariant subspace reached without meeting the tolerance.
            termination = if h_next == 0.0 { Termination::Converged } else { Termination::Breakdown };
            break;
        }
        if k + 1 < maxit {
            basis.push(space.combine(&[(1.0 / h_next, &w)])?);
        }
    }
    // Back substitution for the upper triangular least-squares system.
    let mut y = vec![0.0; steps];
    for i in (0..steps).rev() {
        let mut acc = g[i];
        for j in i + 1..steps {
            acc -= h[j][i] * y[j];
        }
        y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
    }
    let terms: Vec<(f64, &S::Elem)> = y.iter().copied().zip(basis.iter()).collect();
    let ysum = space.combine_t(&terms)?;
    let y_tilde = space.precondition_t(&ysum)?;
    let u = space.combine_t(&[(1.0, &x0), (1.0, &y_tilde)])?;
    let rank = space.rank(&u);
    if let Some(last) = tr.history.last_mut() {
        last.rank = rank;
    }
    let iterated = tr.relative(g[steps].abs());
    Ok(tr.finish(u, steps, steps as f64, iterated, termination))
}
