mod common;

use common::*;
use sgdg::krylov::*;
use sgdg::lowrank::{truncate, KroneckerOperator, LowRankMatrix};
use sgdg::precond::{Preconditioner, PreconditionerKind};
use sgdg::sparse::CsrMatrix;

fn config(method: Method) -> SolverConfig {
    SolverConfig::new(method, 1e-10, 1e-12, 100, PreconditionerKind::Mean)
}

fn setup(seed: u64) -> (KroneckerOperator, LowRankMatrix) {
    let mut r = rng(seed);
    let op = random_operator(&mut r, 40, 2, 3);
    let f = random_low_rank(&mut r, 40, op.p(), 2);
    (op, f)
}

#[test]
fn low_rank_solvers_match_direct_solution() {
    let (op, f) = setup(11);
    let exact = full_direct(&op, &f.to_dense()).unwrap();
    for method in Method::ALL {
        for kind in [PreconditionerKind::Mean, PreconditionerKind::Ullmann] {
            let pc = Preconditioner::build(kind, &op).unwrap();
            let cfg = SolverConfig { precond: kind, ..config(method) };
            let (u, report) = solve_low_rank(&op, &pc, &f, &cfg, None).unwrap();
            if method == Method::Cg {
                // The random blocks are not symmetric; only require no blow-up.
                assert!(report.relative_residual.is_finite());
                continue;
            }
            assert!(report.converged(), "{method:?} {kind:?}: {report:?}");
            assert!(report.relative_residual <= 1e-10 * 1.0001);
            assert!(rel_diff(&u.to_dense(), &exact) < 1e-8, "{method:?} {kind:?}");
        }
    }
}

#[test]
fn dense_solvers_match_direct_solution() {
    let (op, f) = setup(12);
    let exact = full_direct(&op, &f.to_dense()).unwrap();
    let pc = Preconditioner::build(PreconditionerKind::Mean, &op).unwrap();
    for method in [Method::Bicgstab, Method::Qmrcgstab, Method::Gmres] {
        let (u, report) = full_iterative(&op, &pc, &f.to_dense(), &config(method)).unwrap();
        assert!(report.converged(), "{method:?}");
        assert!(rel_diff(&u, &exact) < 1e-8);
    }
}

#[test]
fn cg_solves_symmetric_positive_systems() {
    let mut r = rng(13);
    let basis = sgdg::chaos::chaos_basis(2, 3).unwrap();
    let terms = basis
        .g_mats
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let a = random_sparse(&mut r, 30, 0.0, 0.2);
            let sym = a.linear_combination(0.5, &a.transpose(), 0.5);
            let spatial = if k == 0 { sym.linear_combination(1.0, &CsrMatrix::identity(30), 6.0) } else { sym };
            (g.clone(), spatial)
        })
        .collect();
    let op = KroneckerOperator::new(terms).unwrap();
    let f = random_low_rank(&mut r, 30, op.p(), 1);
    let pc = Preconditioner::build(PreconditionerKind::Mean, &op).unwrap();
    let (u, report) = lr_cg(&op, &pc, &f, &config(Method::Cg)).unwrap();
    assert!(report.converged());
    let exact = full_direct(&op, &f.to_dense()).unwrap();
    assert!(rel_diff(&u.to_dense(), &exact) < 1e-8);
}

#[test]
fn exact_preconditioner_converges_in_one_step() {
    let mut r = rng(14);
    let basis = sgdg::chaos::chaos_basis(2, 2).unwrap();
    let k0 = random_sparse(&mut r, 20, 5.0, 1.0);
    let terms = basis
        .g_mats
        .iter()
        .enumerate()
        .map(|(k, g)| (g.clone(), if k == 0 { k0.clone() } else { CsrMatrix::zeros(20, 20) }))
        .collect();
    let op = KroneckerOperator::new(terms).unwrap();
    let f = random_low_rank(&mut r, 20, op.p(), 2);
    let pc = Preconditioner::build(PreconditionerKind::Mean, &op).unwrap();
    for method in Method::ALL {
        let cfg = SolverConfig::new(method, 1e-12, 1e-14, 10, PreconditionerKind::Mean);
        let (_, report) = solve_low_rank(&op, &pc, &f, &cfg, None).unwrap();
        assert!(report.converged(), "{method:?}");
        assert_eq!(report.iterations, 1, "{method:?}");
        assert!(report.relative_residual <= 1e-12);
    }
}

#[test]
fn zero_right_hand_side_returns_zero() {
    let (op, _) = setup(15);
    let pc = Preconditioner::build(PreconditionerKind::Mean, &op).unwrap();
    let f = LowRankMatrix::zeros(op.nd(), op.p());
    for method in Method::ALL {
        let (u, report) = solve_low_rank(&op, &pc, &f, &config(method), None).unwrap();
        assert_eq!(u.norm(), 0.0);
        assert_eq!(report.iterations, 0);
        assert!(report.converged());
    }
}

#[test]
fn iteration_limit_is_reported() {
    let (op, f) = setup(16);
    let pc = Preconditioner::build(PreconditionerKind::None, &op).unwrap();
    for method in Method::ALL {
        let cfg = SolverConfig::new(method, 1e-14, 1e-14, 1, PreconditionerKind::None);
        let (_, report) = solve_low_rank(&op, &pc, &f, &cfg, None).unwrap();
        assert_eq!(report.termination, Termination::Maxit, "{method:?}");
        assert_eq!(report.history.len(), 1, "{method:?}");
    }
}

#[test]
fn warm_start_at_the_solution_stops_immediately() {
    let (op, f) = setup(17);
    let exact = full_direct(&op, &f.to_dense()).unwrap();
    let x0 = truncate(&LowRankMatrix::from_dense(exact.as_ref()), 1e-14).unwrap();
    let pc = Preconditioner::build(PreconditionerKind::Mean, &op).unwrap();
    let (_, report) = solve_low_rank(&op, &pc, &f, &config(Method::Gmres), Some(x0)).unwrap();
    assert_eq!(report.iterations, 0);
}

#[test]
fn invalid_configurations_are_rejected() {
    let (op, f) = setup(18);
    let pc = Preconditioner::build(PreconditionerKind::Mean, &op).unwrap();
    let bad = [
        SolverConfig::new(Method::Cg, 1e-8, 1e-6, 10, PreconditionerKind::Mean),
        SolverConfig::new(Method::Cg, 0.0, 0.0, 10, PreconditionerKind::Mean),
        SolverConfig::new(Method::Cg, 1e-6, 1e-8, 0, PreconditionerKind::Mean),
    ];
    for cfg in bad {
        assert!(solve_low_rank(&op, &pc, &f, &cfg, None).is_err());
    }
    assert!("nope".parse::<Method>().is_err());
    assert_eq!("qmrcgstab".parse::<Method>().unwrap(), Method::Qmrcgstab);
}

#[test]
fn history_ranks_respect_the_cap() {
    let (op, f) = setup(19);
    let pc = Preconditioner::build(PreconditionerKind::Mean, &op).unwrap();
    for method in Method::ALL {
        let (u, report) = solve_low_rank(&op, &pc, &f, &config(method), None).unwrap();
        assert!(report.history.iter().all(|h| h.rank <= op.p().min(op.nd())));
        assert_eq!(report.rank, u.rank());
        assert!((report.memory_kb - u.memory_kb()).abs() < 1e-12);
    }
}

#[test]
fn recomputed_residual_tracks_the_iterated_one() {
    let spec = sgdg::driver::BenchmarkSpec {
        nx: 8,
        ny: 8,
        nu: 1e-2,
        ..sgdg::driver::BenchmarkSpec::defaults(sgdg::driver::Problem::SteadyDiffusion)
    };
    let system = sgdg::driver::build_system(&spec).unwrap();
    let pc = Preconditioner::build(PreconditionerKind::Mean, &system.op).unwrap();
    let (tol, eps) = (1e-6, 1e-8);
    for method in [Method::Bicgstab, Method::Qmrcgstab, Method::Gmres] {
        let cfg = SolverConfig::new(method, tol, eps, 100, PreconditionerKind::Mean);
        let (_, r) = solve_low_rank(&system.op, &pc, &system.rhs, &cfg, None).unwrap();
        assert!(r.converged(), "{method:?}: {r:?}");
        assert!(r.relative_residual <= tol + 10.0 * eps, "{method:?}: {r:?}");
        assert!((r.relative_residual - r.iterated_residual).abs() <= 5.0 * eps, "{method:?}: {r:?}");
    }
}
