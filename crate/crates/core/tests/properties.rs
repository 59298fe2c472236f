mod common;

use common::*;
use faer::Mat;
use proptest::prelude::*;
use sgdg::chaos::{basis_size, chaos_basis};
use sgdg::driver::compute_moments;
use sgdg::lowrank::*;
use sgdg::mesh::build_rect_mesh;
use sgdg::precond::{Preconditioner, PreconditionerKind};
use sgdg::random_field::{assemble_2d_eigenpairs, CovarianceSpec};

/// `(nd, n, q)` with `nd <= 60` and `P <= 20`.
fn sizes() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..=60, 1usize..=3, 0usize..=3).prop_filter("P <= 20", |&(_, n, q)| basis_size(n, q).unwrap() <= 20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_apply_matches_dense((nd, n, q) in sizes(), r in 0usize..4, seed in any::<u64>()) {
        let mut g = rng(seed);
        let op = random_operator(&mut g, nd, n, q);
        let x = random_low_rank(&mut g, nd, op.p(), r);
        let y = kron_apply(&op, &x).unwrap().to_dense();
        let xd = x.to_dense();
        let mut y_ref = Mat::<f64>::zeros(nd, op.p());
        for (gk, kk) in op.terms() {
            y_ref += kk.to_dense() * &xd * gk.to_dense().transpose();
        }
        prop_assert!((&y - &y_ref).norm_l2() <= 1e-12 * y_ref.norm_l2().max(1e-300));
    }

    #[test]
    fn inner_and_norm_match_dense(m in 1usize..40, p in 1usize..20, ra in 0usize..5, rb in 0usize..5, seed in any::<u64>()) {
        let mut g = rng(seed);
        let (a, b) = (random_low_rank(&mut g, m, p, ra), random_low_rank(&mut g, m, p, rb));
        let (ad, bd) = (a.to_dense(), b.to_dense());
        let mut dense = 0.0;
        for i in 0..m {
            for j in 0..p {
                dense += ad[(i, j)] * bd[(i, j)];
            }
        }
        let scale = ad.norm_l2() * bd.norm_l2();
        prop_assert!((inner(&a, &b).unwrap() - dense).abs() <= 1e-12 * scale.max(1e-300));
        prop_assert!((a.norm() - ad.norm_l2()).abs() <= 1e-12 * ad.norm_l2().max(1e-300));
    }

    #[test]
    fn axpy_matches_dense(m in 1usize..40, p in 1usize..20, alpha in -3.0f64..3.0, seed in any::<u64>()) {
        let mut g = rng(seed);
        let (x, y) = (random_low_rank(&mut g, m, p, 2), random_low_rank(&mut g, m, p, 3));
        let z = axpy(alpha, &x, &y).unwrap().to_dense();
        let z_ref = x.to_dense() * faer::Scale(alpha) + y.to_dense();
        prop_assert!(rel_diff(&z, &z_ref) <= 1e-12);
        prop_assert_eq!(truncate(&axpy(-1.0, &x, &x).unwrap(), 1e-8).unwrap().rank(), 0);
    }

    #[test]
    fn truncation_is_accurate_idempotent_and_contractive(m in 1usize..60, p in 1usize..20, r in 1usize..8, eps in 1e-12f64..1e-2, seed in any::<u64>()) {
        let mut g = rng(seed);
        let x = random_low_rank(&mut g, m, p, r);
        let t = truncate(&x, 1e-14).unwrap();
        prop_assert!(rel_diff(&t.to_dense(), &x.to_dense()) <= 1e-12);
        prop_assert!(t.rank() <= r.min(m).min(p));
        let t1 = truncate(&x, eps).unwrap();
        let t2 = truncate(&t1, eps).unwrap();
        prop_assert_eq!(t1.rank(), t2.rank());
        prop_assert!(rel_diff(&t2.to_dense(), &t1.to_dense()) <= 1e-12);
        prop_assert!(t1.norm() <= x.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn preconditioner_inverse_matches_dense((nd, n, q) in sizes(), ullmann in any::<bool>(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let op = random_operator(&mut g, nd, n, q);
        let kind = if ullmann { PreconditionerKind::Ullmann } else { PreconditionerKind::Mean };
        let pc = Preconditioner::build(kind, &op).unwrap();
        let x = random_low_rank(&mut g, nd, op.p(), 2);
        let y = pc.apply_inverse(&x).unwrap().to_dense();
        // Check K_0 Y G~^T = X densely.
        let k0 = op.terms()[0].1.to_dense();
        let gt = match pc.g_tilde() {
            Some(gm) => gm.to_dense(),
            None => Mat::identity(op.p(), op.p()),
        };
        let back = &k0 * &y * gt.transpose();
        prop_assert!(rel_diff(&back, &x.to_dense()) <= 1e-11);
    }

    #[test]
    fn chaos_matrices_are_symmetric_and_sparse(n in 1usize..=4, q in 0usize..=4) {
        let basis = chaos_basis(n, q).unwrap();
        prop_assert_eq!(basis.size(), basis_size(n, q).unwrap());
        for (k, g) in basis.g_mats.iter().enumerate() {
            prop_assert!(g.max_asymmetry() == 0.0);
            for i in 0..g.nrows() {
                if k == 0 {
                    prop_assert_eq!(g.get(i, i), 1.0);
                    prop_assert_eq!(g.row_nnz(i), 1);
                } else {
                    prop_assert!(g.row_nnz(i) <= 2);
                }
            }
        }
    }

    #[test]
    fn kl_eigenvalues_are_positive_sorted_and_bounded(ell in 0.3f64..4.0, n in 1usize..40) {
        let spec = CovarianceSpec::isotropic(1.0, ell, [0.0, 1.0, 0.0, 1.0]);
        let kl = assemble_2d_eigenpairs(&spec, n).unwrap();
        prop_assert_eq!(kl.len(), n);
        for pair in kl.modes.windows(2) {
            prop_assert!(pair[0].lambda >= pair[1].lambda);
        }
        prop_assert!(kl.modes.iter().all(|m| m.lambda > 0.0));
        let total: f64 = kl.modes.iter().map(|m| m.lambda).sum();
        prop_assert!(total <= spec.area() * (1.0 + 1e-10));
    }

    #[test]
    fn mesh_areas_and_normals(nx in 1usize..12, ny in 1usize..12, w in 0.5f64..3.0, h in 0.5f64..3.0) {
        let mesh = build_rect_mesh(-1.0, -1.0 + w, 0.0, h, nx, ny).unwrap();
        let area: f64 = mesh.areas.iter().sum();
        prop_assert!((area - w * h).abs() <= 1e-12 * w * h);
        prop_assert_eq!(mesh.num_dofs(), 6 * nx * ny);
        prop_assert_eq!(mesh.edges.len(), 3 * nx * ny + nx + ny);
        for e in &mesh.edges {
            let len = (e.normal[0].powi(2) + e.normal[1].powi(2)).sqrt();
            prop_assert!((len - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn variance_is_nonnegative(r in 0usize..6, q in 0usize..4, seed in any::<u64>()) {
        let mut g = rng(seed);
        let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let basis = chaos_basis(2, q).unwrap();
        let u = random_low_rank(&mut g, mesh.num_dofs(), basis.size(), r);
        let m = compute_moments(&u, &basis, &mesh).unwrap();
        let dense = u.to_dense();
        for i in 0..mesh.num_dofs() {
            prop_assert!(m.variance[i] >= -1e-12);
            let direct: f64 = (1..basis.size()).map(|j| dense[(i, j)].powi(2)).sum();
            prop_assert!((m.variance[i] - direct).abs() <= 1e-12 * (1.0 + direct));
            prop_assert!((m.mean[i] - dense[(i, 0)]).abs() <= 1e-12 * (1.0 + dense[(i, 0)].abs()));
        }
    }
}
