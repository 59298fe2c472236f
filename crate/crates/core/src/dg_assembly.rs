//! Symmetric interior penalty DG assembly with piecewise-linear elements.
//!
//! Degrees of freedom are the three barycentric basis functions of each
//! triangle, numbered `3 t + i`. Matrix rows index test functions and
//! columns trial functions, `K[s, r] = a_h(phi_r, phi_s)`.
//!
//! The bilinear form on element `K` with edges `E` reads
//!
//! ```text
//! sum_K int_K a grad u . grad v + (b . grad u) v
//!   - sum_E int_E {a grad u . n}[v] + {a grad v . n}[u] - (sigma/h_E) [u][v]
//!   + sum_K int_{dK- \ dD} b . n_K (u_e - u) v - int_{dK- & dD-} b . n_K u v
//! ```
//!
//! where `dK-` is the inflow part of the element boundary and `u_e` the
//! trace from the neighbour. Inflow is decided once from the mean velocity,
//! which keeps every fluctuation matrix independent of the realization.

use std::sync::Arc;

use crate::error::{arg, Error, Result};
use crate::exec;
use crate::mesh::{classify_edges, EdgeClassification, Mesh, Point};
use crate::quadrature::{gauss_legendre, triangle_rule};
use crate::random_field::ScalarField;
use crate::sparse::CsrMatrix;

pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Default interior penalty parameter.
pub const DEFAULT_SIGMA: f64 = 10.0;

/// Points of the Gauss-Legendre rule used on every edge.
pub const EDGE_POINTS: usize = 4;

/// Which blocks receive the interior penalty term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PenaltyPlacement {
    /// Penalty only in the mean block `K_0` (and its boundary data in `f_0`).
    #[default]
    MeanOnly,
    /// Penalty repeated in every `K_i` and `f_i`.
    EveryMode,
}

/// Coefficients of an affine random convection-diffusion problem
/// `-div(a grad u) + b . grad u = f`, `u = u_d` on the boundary, with
/// `a = a_0 + sum_k a_k xi_k` and `b = b_0 + sum_k b_k xi_k`.
#[derive(Clone)]
pub struct ProblemData {
    pub mean_diffusion: ScalarField,
    /// Fluctuation modes `a_k`, already scaled by `kappa sqrt(lambda_k)`.
    pub diffusion_modes: Vec<ScalarField>,
    pub mean_velocity: VectorField,
    pub velocity_modes: Vec<VectorField>,
    pub source: ScalarField,
    pub dirichlet: ScalarField,
    pub sigma: f64,
    pub penalty: PenaltyPlacement,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("diffusion_modes", &self.diffusion_modes.len())
            .field("velocity_modes", &self.velocity_modes.len())
            .field("sigma", &self.sigma)
            .field("penalty", &self.penalty)
            .finish()
    }
}

impl ProblemData {
    /// Deterministic problem with constant diffusion and velocity.
    pub fn deterministic(diffusion: f64, velocity: [f64; 2], source: ScalarField, dirichlet: ScalarField) -> Self {
        Self {
            mean_diffusion: Arc::new(move |_| diffusion),
            diffusion_modes: vec![],
            mean_velocity: Arc::new(move |_| velocity),
            velocity_modes: vec![],
            source,
            dirichlet,
            sigma: DEFAULT_SIGMA,
            penalty: PenaltyPlacement::default(),
        }
    }

    /// Stochastic dimension `N`.
    pub fn num_modes(&self) -> usize {
        self.diffusion_modes.len().max(self.velocity_modes.len())
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.sigma > 0.0) {
            return arg(format!("penalty parameter must be positive, got {}", self.sigma));
        }
        let n = self.num_modes();
        for (name, len) in [("diffusion", self.diffusion_modes.len()), ("velocity", self.velocity_modes.len())] {
            if len != 0 && len != n {
                return arg(format!("{name} has {len} modes, expected 0 or {n}"));
            }
        }
        let rule = triangle_rule();
        for t in 0..mesh.num_triangles() {
            let g = ElementGeometry::new(mesh, t);
            for (l, _) in &rule {
                let a = (self.mean_diffusion)(g.point(*l));
                if !(a > 0.0) {
                    return arg(format!("mean diffusion must be positive, found {a} in triangle {t}"));
                }
            }
        }
        Ok(())
    }

    /// The deterministic problem obtained at the parameter point `xi`.
    pub fn realization(&self, xi: &[f64]) -> Result<ProblemData> {
        if xi.len() != self.num_modes() {
            return arg(format!("realization has length {}, problem has {} modes", xi.len(), self.num_modes()));
        }
        let (a0, am, xa) = (self.mean_diffusion.clone(), self.diffusion_modes.clone(), xi.to_vec());
        let (b0, bm, xb) = (self.mean_velocity.clone(), self.velocity_modes.clone(), xi.to_vec());
        Ok(ProblemData {
            mean_diffusion: Arc::new(move |p| a0(p) + am.iter().zip(&xa).map(|(a, x)| a(p) * x).sum::<f64>()),
            diffusion_modes: vec![],
            mean_velocity: Arc::new(move |p| {
                let mut b = b0(p);
                for (m, x) in bm.iter().zip(&xb) {
                    let v = m(p);
                    b[0] += v[0] * x;
                    b[1] += v[1] * x;
                }
                b
            }),
            velocity_modes: vec![],
            source: self.source.clone(),
            dirichlet: self.dirichlet.clone(),
            sigma: self.sigma,
            penalty: self.penalty,
        })
    }

    pub fn classify(&self, mesh: &Mesh) -> EdgeClassification {
        classify_edges(mesh, |p| (self.mean_velocity)(p))
    }
}

/// Matrices and vectors of the stochastic Galerkin system.
#[derive(Clone, Debug)]
pub struct SpatialOperators {
    pub k: Vec<CsrMatrix>,
    pub f: Vec<Vec<f64>>,
    pub mass: CsrMatrix,
}

/// Affine geometry of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub corners: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grads: [[f64; 2]; 3],
    pub centroid: Point,
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let p = mesh.corners(t);
        let area = mesh.areas[t];
        let mut grads = [[0.0; 2]; 3];
        for (i, g) in grads.iter_mut().enumerate() {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            *g = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
        }
        let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        Self { corners: p, area, grads, centroid }
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        let p = &self.corners;
        [l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0], l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1]]
    }

    /// Values of the three basis functions at `x` (extended affinely).
    pub fn basis(&self, x: Point) -> [f64; 3] {
        let d = [x[0] - self.centroid[0], x[1] - self.centroid[1]];
        let g = &self.grads;
        [
            1.0 / 3.0 + g[0][0] * d[0] + g[0][1] * d[1],
            1.0 / 3.0 + g[1][0] * d[0] + g[1][1] * d[1],
            1.0 / 3.0 + g[2][0] * d[0] + g[2][1] * d[1],
        ]
    }
}

/// Quadrature points and weights (including the length factor) on edge `e`.
pub fn edge_quadrature(mesh: &Mesh, e: usize) -> Vec<(Point, f64)> {
    let (t, w) = gauss_legendre(EDGE_POINTS);
    let edge = &mesh.edges[e];
    let (pa, pb) = (mesh.vertices[edge.v[0]], mesh.vertices[edge.v[1]]);
    t.iter()
        .zip(&w)
        .map(|(t, w)| {
            let s = 0.5 * (t + 1.0);
            ([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])], 0.5 * w * edge.length)
        })
        .collect()
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Coefficients of one block of the affine expansion.
struct Coefficients<'a> {
    diffusion: Option<&'a ScalarField>,
    velocity: Option<&'a VectorField>,
    penalty: bool,
}

impl Coefficients<'_> {
    fn a(&self, p: Point) -> f64 {
        self.diffusion.map_or(0.0, |f| f(p))
    }

    fn b(&self, p: Point) -> [f64; 2] {
        self.velocity.map_or([0.0, 0.0], |f| f(p))
    }
}

/// Volume diffusion and convection on one triangle, `[test][trial]`.
pub fn element_matrix(
    geom: &ElementGeometry,
    diffusion: impl Fn(Point) -> f64,
    velocity: impl Fn(Point) -> [f64; 2],
) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for (l, w) in triangle_rule() {
        let x = geom.point(l);
        let (a, b) = (diffusion(x), velocity(x));
        let wq = w * geom.area;
        for s in 0..3 {
            for r in 0..3 {
                m[s][r] += wq * (a * dot(geom.grads[r], geom.grads[s]) + dot(b, geom.grads[r]) * l[s]);
            }
        }
    }
    m
}

fn assemble_block(mesh: &Mesh, flow: &EdgeClassification, sigma: f64, c: &Coefficients<'_>) -> CsrMatrix {
    let geoms: Vec<ElementGeometry> = (0..mesh.num_triangles()).map(|t| ElementGeometry::new(mesh, t)).collect();
    let volume = exec::map_range(mesh.num_triangles(), |t| {
        let m = element_matrix(&geoms[t], |p| c.a(p), |p| c.b(p));
        let mut out = Vec::with_capacity(9);
        for s in 0..3 {
            for r in 0..3 {
                out.push((3 * t + s, 3 * t + r, m[s][r]));
            }
        }
        out
    });
    let faces = exec::map_range(mesh.edges.len(), |e| edge_entries(mesh, &geoms, flow, sigma, c, e));
    let triplets: Vec<_> = volume.into_iter().chain(faces).flatten().collect();
    CsrMatrix::from_triplets(mesh.num_dofs(), mesh.num_dofs(), &triplets).expect("dofs in range")
}

fn edge_entries(
    mesh: &Mesh,
    geoms: &[ElementGeometry],
    flow: &EdgeClassification,
    sigma: f64,
    c: &Coefficients<'_>,
    e: usize,
) -> Vec<(usize, usize, f64)> {
    let edge = &mesh.edges[e];
    let n = edge.normal;
    let pen = if c.penalty { sigma / edge.length } else { 0.0 };
    let quad = edge_quadrature(mesh, e);
    let left = &geoms[edge.left];
    match edge.right {
        None => {
            let inflow = flow.boundary_inflow(e);
            let mut m = [[0.0; 3]; 3];
            for &(x, w) in &quad {
                let (a, bn) = (c.a(x), dot(c.b(x), n));
                let v = left.basis(x);
                let dn: Vec<f64> = left.grads.iter().map(|g| a * dot(*g, n)).collect();
                for s in 0..3 {
                    for r in 0..3 {
                        let mut val = -dn[r] * v[s] - dn[s] * v[r] + pen * v[r] * v[s];
                        if inflow {
                            val -= bn * v[r] * v[s];
                        }
                        m[s][r] += w * val;
                    }
                }
            }
            let t = edge.left;
            (0..9).map(|k| (3 * t + k / 3, 3 * t + k % 3, m[k / 3][k % 3])).collect()
        }
        Some(rt) => {
            let right = &geoms[rt];
            let dofs: Vec<usize> = (0..3).map(|i| 3 * edge.left + i).chain((0..3).map(|i| 3 * rt + i)).collect();
            let (in_left, in_right) = (flow.inflow_for_left(e), flow.inflow_for_right(e));
            let mut m = [[0.0; 6]; 6];
            for &(x, w) in &quad {
                let (a, bn) = (c.a(x), dot(c.b(x), n));
                let (vl, vr) = (left.basis(x), right.basis(x));
                // Traces of the six local functions: value, jump, average of a grad . n.
                let mut val = [0.0; 6];
                let mut jump = [0.0; 6];
                let mut avg = [0.0; 6];
                for i in 0..3 {
                    val[i] = vl[i];
                    jump[i] = vl[i];
                    avg[i] = 0.5 * a * dot(left.grads[i], n);
                    val[i + 3] = vr[i];
                    jump[i + 3] = -vr[i];
                    avg[i + 3] = 0.5 * a * dot(right.grads[i], n);
                }
                for s in 0..6 {
                    for r in 0..6 {
                        m[s][r] += w * (-avg[r] * jump[s] - avg[s] * jump[r] + pen * jump[r] * jump[s]);
                    }
                }
                // Upwind coupling on the inflow side: int b . n_K (u_e - u) v.
                if in_left {
                    for s in 0..3 {
                        for r in 0..3 {
                            m[s][r + 3] += w * bn * val[r + 3] * val[s];
                            m[s][r] -= w * bn * val[r] * val[s];
                        }
                    }
                }
                if in_right {
                    let bnr = -bn;
                    for s in 3..6 {
                        for r in 0..3 {
                            m[s][r] += w * bnr * val[r] * val[s];
                            m[s][r + 3] -= w * bnr * val[r + 3] * val[s];
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(36);
            for s in 0..6 {
                for r in 0..6 {
                    out.push((dofs[s], dofs[r], m[s][r]));
                }
            }
            out
        }
    }
}

fn assemble_vector(
    mesh: &Mesh,
    flow: &EdgeClassification,
    sigma: f64,
    c: &Coefficients<'_>,
    source: Option<&ScalarField>,
    dirichlet: &ScalarField,
) -> Vec<f64> {
    let mut f = vec![0.0; mesh.num_dofs()];
    let geoms: Vec<ElementGeometry> = (0..mesh.num_triangles()).map(|t| ElementGeometry::new(mesh, t)).collect();
    if let Some(src) = source {
        let local = exec::map_range(mesh.num_triangles(), |t| {
            let g = &geoms[t];
            let mut v = [0.0; 3];
            for (l, w) in triangle_rule() {
                let fx = src(g.point(l)) * w * g.area;
                for s in 0..3 {
                    v[s] += fx * l[s];
                }
            }
            v
        });
        for (t, v) in local.into_iter().enumerate() {
            f[3 * t..3 * t + 3].iter_mut().zip(v).for_each(|(d, x)| *d += x);
        }
    }
    for (e, edge) in mesh.edges.iter().enumerate().filter(|(_, e)| e.is_boundary()) {
        let n = edge.normal;
        let pen = if c.penalty { sigma / edge.length } else { 0.0 };
        let inflow = flow.boundary_inflow(e);
        let g = &geoms[edge.left];
        for (x, w) in edge_quadrature(mesh, e) {
            let ud = dirichlet(x);
            if ud == 0.0 {
                continue;
            }
            let (a, bn) = (c.a(x), dot(c.b(x), n));
            let v = g.basis(x);
            for s in 0..3 {
                let mut val = pen * ud * v[s] - ud * a * dot(g.grads[s], n);
                if inflow {
                    val -= bn * ud * v[s];
                }
                f[3 * edge.left + s] += w * val;
            }
        }
    }
    f
}

fn mode_coefficients(data: &ProblemData, i: usize) -> Result<Coefficients<'_>> {
    if i == 0 {
        return Ok(Coefficients { diffusion: Some(&data.mean_diffusion), velocity: Some(&data.mean_velocity), penalty: true });
    }
    if i > data.num_modes() {
        return arg(format!("mode index {i} outside 1..={}", data.num_modes()));
    }
    Ok(Coefficients {
        diffusion: data.diffusion_modes.get(i - 1),
        velocity: data.velocity_modes.get(i - 1),
        penalty: data.penalty == PenaltyPlacement::EveryMode,
    })
}

/// Mean-coefficient matrix `K_0`.
pub fn assemble_k0(mesh: &Mesh, data: &ProblemData) -> Result<CsrMatrix> {
    data.validate(mesh)?;
    Ok(assemble_block(mesh, &data.classify(mesh), data.sigma, &mode_coefficients(data, 0)?))
}

/// Fluctuation matrix `K_i` for `1 <= i <= N`.
pub fn assemble_ki(mesh: &Mesh, data: &ProblemData, i: usize) -> Result<CsrMatrix> {
    if i == 0 {
        return arg("fluctuation modes are numbered from 1");
    }
    let c = mode_coefficients(data, i)?;
    data.validate(mesh)?;
    Ok(assemble_block(mesh, &data.classify(mesh), data.sigma, &c))
}

/// Right-hand side `f_i`; only `f_0` carries the volume source.
pub fn assemble_rhs(mesh: &Mesh, data: &ProblemData, i: usize) -> Result<Vec<f64>> {
    let c = mode_coefficients(data, i)?;
    if !(data.sigma > 0.0) {
        return arg(format!("penalty parameter must be positive, got {}", data.sigma));
    }
    let src = (i == 0).then_some(&data.source);
    Ok(assemble_vector(mesh, &data.classify(mesh), data.sigma, &c, src, &data.dirichlet))
}

/// Block-diagonal mass matrix, exact for linear elements.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut t = Vec::with_capacity(9 * mesh.num_triangles());
    for (k, &area) in mesh.areas.iter().enumerate() {
        for s in 0..3 {
            for r in 0..3 {
                t.push((3 * k + s, 3 * k + r, area / 12.0 * if s == r { 2.0 } else { 1.0 }));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_dofs(), mesh.num_dofs(), &t).expect("dofs in range")
}

/// All matrices `K_0..K_N`, vectors `f_0..f_N` and the mass matrix.
pub fn assemble_operators(mesh: &Mesh, data: &ProblemData) -> Result<SpatialOperators> {
    data.validate(mesh)?;
    let flow = data.classify(mesh);
    let n = data.num_modes();
    let mut k = Vec::with_capacity(n + 1);
    let mut f = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let c = mode_coefficients(data, i)?;
        k.push(assemble_block(mesh, &flow, data.sigma, &c));
        let src = (i == 0).then_some(&data.source);
        f.push(assemble_vector(mesh, &flow, data.sigma, &c, src, &data.dirichlet));
    }
    Ok(SpatialOperators { k, f, mass: assemble_mass(mesh) })
}

/// Solves the deterministic problem (all modes ignored) by sparse LU.
pub fn solve_deterministic(mesh: &Mesh, data: &ProblemData) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let k = assemble_k0(mesh, data)?;
    let f = assemble_rhs(mesh, data, 0)?;
    let lu = k.to_faer()?.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
    let mut x = faer::Mat::from_fn(f.len(), 1, |i, _| f[i]);
    lu.solve_in_place(x.as_mut());
    let out = x.col_as_slice(0).to_vec();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("singular deterministic system".into()));
    }
    Ok(out)
}

/// Exact solution for error measurement: value and gradient.
pub struct ExactSolution<'a> {
    pub value: &'a (dyn Fn(Point) -> f64 + Sync),
    pub gradient: &'a (dyn Fn(Point) -> [f64; 2] + Sync),
}

/// DG energy norm of `u - u_h` for the deterministic problem `data`:
///
/// ```text
/// sum_K int a |grad e|^2 + sum_E sigma/h_E int [e]^2
///   + 1/2 sum_{boundary} int |b.n| e^2 + 1/2 sum_{interior} int |b.n| [e]^2
/// ```
pub fn energy_error(mesh: &Mesh, data: &ProblemData, uh: &[f64], exact: &ExactSolution<'_>) -> f64 {
    let geoms: Vec<ElementGeometry> = (0..mesh.num_triangles()).map(|t| ElementGeometry::new(mesh, t)).collect();
    let local = |t: usize, x: Point| {
        let v = geoms[t].basis(x);
        (0..3).map(|i| uh[3 * t + i] * v[i]).sum::<f64>()
    };
    let volume: f64 = exec::map_range(mesh.num_triangles(), |t| {
        let g = &geoms[t];
        let gh = (0..3).fold([0.0, 0.0], |acc, i| {
            [acc[0] + uh[3 * t + i] * g.grads[i][0], acc[1] + uh[3 * t + i] * g.grads[i][1]]
        });
        triangle_rule()
            .iter()
            .map(|(l, w)| {
                let x = g.point(*l);
                let ge = (exact.gradient)(x);
                let d = [ge[0] - gh[0], ge[1] - gh[1]];
                w * g.area * (data.mean_diffusion)(x) * dot(d, d)
            })
            .sum::<f64>()
    })
    .iter()
    .sum();
    let faces: f64 = exec::map_range(mesh.edges.len(), |e| {
        let edge = &mesh.edges[e];
        let pen = data.sigma / edge.length;
        edge_quadrature(mesh, e)
            .iter()
            .map(|&(x, w)| {
                let bn = dot((data.mean_velocity)(x), edge.normal).abs();
                let jump = match edge.right {
                    None => (exact.value)(x) - local(edge.left, x),
                    Some(r) => local(r, x) - local(edge.left, x),
                };
                w * (pen + 0.5 * bn) * jump * jump
            })
            .sum::<f64>()
    })
    .iter()
    .sum();
    (volume + faces).sqrt()
}
