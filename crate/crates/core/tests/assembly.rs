use std::sync::Arc;

use sgdg::dg_assembly::*;
use sgdg::mesh::build_rect_mesh;

fn zero() -> sgdg::random_field::ScalarField {
    Arc::new(|_| 0.0)
}

#[test]
fn mass_blocks_are_exact() {
    let mesh = build_rect_mesh(0.0, 2.0, 0.0, 1.0, 1, 1).unwrap();
    let m = assemble_mass(&mesh);
    assert_eq!(m.nnz(), 18);
    for t in 0..2 {
        let a = mesh.areas[t];
        assert!((a - 1.0).abs() < 1e-15);
        assert!((m.get(3 * t, 3 * t) - a / 6.0).abs() < 1e-15);
        assert!((m.get(3 * t, 3 * t + 1) - a / 12.0).abs() < 1e-15);
    }
}

#[test]
fn pure_diffusion_block_is_symmetric() {
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 3).unwrap();
    let data = ProblemData::deterministic(2.5, [0.0, 0.0], zero(), zero());
    let k = assemble_k0(&mesh, &data).unwrap();
    assert!(k.max_asymmetry() < 1e-12 * k.norm_inf());
}

#[test]
fn source_load_is_a_third_of_the_area() {
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
    let data = ProblemData::deterministic(1.0, [0.0, 0.0], Arc::new(|_| 1.0), zero());
    let f = assemble_rhs(&mesh, &data, 0).unwrap();
    for (i, v) in f.iter().enumerate() {
        assert!((v - mesh.areas[i / 3] / 3.0).abs() < 1e-14, "dof {i}");
    }
}

#[test]
fn constants_are_in_the_kernel_of_interior_terms() {
    // With u_d = 0, a constant vector only sees boundary terms. Rows of
    // interior elements sum to zero once convection is divergence-free.
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
    let data = ProblemData::deterministic(1.0, [0.7, -0.3], zero(), zero());
    let k = assemble_k0(&mesh, &data).unwrap();
    let ones = vec![1.0; mesh.num_dofs()];
    let r = k.matvec(&ones);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let on_boundary = tri.iter().any(|&v| {
            let p = mesh.vertices[v];
            p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0
        });
        if !on_boundary {
            for i in 0..3 {
                assert!(r[3 * t + i].abs() < 1e-12, "triangle {t}");
            }
        }
    }
}

#[test]
fn linear_solutions_are_reproduced() {
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 2.0, 5, 4).unwrap();
    let b = [1.0, 0.5];
    let exact = |p: [f64; 2]| p[0] + 2.0 * p[1] - 0.5;
    let data = ProblemData::deterministic(0.3, b, Arc::new(move |_| b[0] + 2.0 * b[1]), Arc::new(exact));
    let u = solve_deterministic(&mesh, &data).unwrap();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for i in 0..3 {
            assert!((u[3 * t + i] - exact(mesh.vertices[tri[i]])).abs() < 1e-10);
        }
    }
}

#[test]
fn vanishing_modes_give_zero_fluctuation_blocks() {
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
    let mut data = ProblemData::deterministic(1.0, [0.0, 1.0], zero(), Arc::new(|p| p[0]));
    data.diffusion_modes = vec![zero(), zero()];
    let ops = assemble_operators(&mesh, &data).unwrap();
    assert_eq!(ops.k.len(), 3);
    assert!(ops.k[1].is_zero() && ops.k[2].is_zero());
    assert!(ops.f[1].iter().all(|v| *v == 0.0));

    data.penalty = PenaltyPlacement::EveryMode;
    let ops = assemble_operators(&mesh, &data).unwrap();
    assert!(!ops.k[1].is_zero());
    assert!(ops.k[1].max_asymmetry() < 1e-12);
}

#[test]
fn fluctuation_blocks_are_linear_in_the_mode() {
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 3, 2).unwrap();
    let mut data = ProblemData::deterministic(1.0, [0.2, 1.0], zero(), Arc::new(|p| p[1]));
    data.diffusion_modes = vec![Arc::new(|p| 0.1 * p[0])];
    data.velocity_modes = vec![Arc::new(|p| [p[1], 0.0])];
    let k1 = assemble_ki(&mesh, &data, 1).unwrap();
    let mut doubled = data.clone();
    doubled.diffusion_modes = vec![Arc::new(|p| 0.2 * p[0])];
    doubled.velocity_modes = vec![Arc::new(|p| [2.0 * p[1], 0.0])];
    let k2 = assemble_ki(&mesh, &doubled, 1).unwrap();
    let diff = k2.linear_combination(1.0, &k1, -2.0);
    assert!(diff.norm_inf() < 1e-12 * k1.norm_inf());
}

#[test]
fn realization_matches_stochastic_blocks() {
    // K(xi) = K_0 + sum xi_k K_k when the classification is unchanged.
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
    let mut data = ProblemData::deterministic(1.0, [0.0, 1.0], Arc::new(|_| 1.0), zero());
    data.diffusion_modes = vec![Arc::new(|p| 0.1 * p[0]), Arc::new(|p| 0.05 * p[1])];
    let ops = assemble_operators(&mesh, &data).unwrap();
    let xi = [0.8, -1.1];
    let kx = assemble_k0(&mesh, &data.realization(&xi).unwrap()).unwrap();
    let sum = ops.k[0].linear_combination(1.0, &ops.k[1], xi[0]).linear_combination(1.0, &ops.k[2], xi[1]);
    assert!(kx.linear_combination(1.0, &sum, -1.0).norm_inf() < 1e-12);
}

#[test]
fn validation_rejects_bad_data() {
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
    let mut data = ProblemData::deterministic(-1.0, [0.0, 0.0], zero(), zero());
    assert!(assemble_k0(&mesh, &data).is_err());
    data.mean_diffusion = Arc::new(|_| 1.0);
    data.sigma = 0.0;
    assert!(assemble_k0(&mesh, &data).is_err());
    data.sigma = 10.0;
    assert!(assemble_ki(&mesh, &data, 0).is_err());
    assert!(assemble_ki(&mesh, &data, 1).is_err());
}

#[test]
fn two_triangle_dense_oracle() {
    // Hand-built operator for -lap u on two triangles, no convection.
    let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
    let data = ProblemData::deterministic(1.0, [0.0, 0.0], zero(), zero());
    let k = assemble_k0(&mesh, &data).unwrap();
    assert_eq!(k.nrows(), 6);
    let kd = k.to_dense();
    // Dense reference by direct quadrature of every term.
    let reference = reference_sipg(&mesh, data.sigma);
    for i in 0..6 {
        for j in 0..6 {
            assert!((kd[(i, j)] - reference[i][j]).abs() < 1e-12, "({i},{j}) {} vs {}", kd[(i, j)], reference[i][j]);
        }
    }
}

/// Straightforward SIPG matrix for the Laplacian, evaluated with a
/// 5-point Gauss rule per edge and exact gradients.
fn reference_sipg(mesh: &sgdg::mesh::Mesh, sigma: f64) -> Vec<Vec<f64>> {
    let nd = mesh.num_dofs();
    let mut a = vec![vec![0.0; nd]; nd];
    let geo: Vec<ElementGeometry> = (0..mesh.num_triangles()).map(|t| ElementGeometry::new(mesh, t)).collect();
    for (t, g) in geo.iter().enumerate() {
        for s in 0..3 {
            for r in 0..3 {
                a[3 * t + s][3 * t + r] += g.area * (g.grads[r][0] * g.grads[s][0] + g.grads[r][1] * g.grads[s][1]);
            }
        }
    }
    let (gx, gw) = sgdg::quadrature::gauss_legendre(5);
    for e in &mesh.edges {
        let (p0, p1) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let n = e.normal;
        // Traces with sign: +1 on the left element, -1 on the right.
        let sides: Vec<(usize, f64)> = std::iter::once((e.left, 1.0)).chain(e.right.map(|r| (r, -1.0))).collect();
        let avg = if e.right.is_some() { 0.5 } else { 1.0 };
        for (x, w) in gx.iter().zip(&gw) {
            let lam = 0.5 * (1.0 + x);
            let p = [p0[0] + lam * (p1[0] - p0[0]), p0[1] + lam * (p1[1] - p0[1])];
            let wq = w * 0.5 * e.length;
            for &(ts, ss) in &sides {
                let vs = geo[ts].basis(p);
                for &(tr, sr) in &sides {
                    let vr = geo[tr].basis(p);
                    for s in 0..3 {
                        for r in 0..3 {
                            let gr = geo[tr].grads[r][0] * n[0] + geo[tr].grads[r][1] * n[1];
                            let gs = geo[ts].grads[s][0] * n[0] + geo[ts].grads[s][1] * n[1];
                            let jump = ss * vs[s] * sr * vr[r];
                            let flux = avg * gr * ss * vs[s] + avg * gs * sr * vr[r];
                            a[3 * ts + s][3 * tr + r] += wq * (sigma / e.length * jump - flux);
                        }
                    }
                }
            }
        }
    }
    a
}
