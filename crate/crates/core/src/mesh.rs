//! Structured triangulations of axis-aligned rectangles.
//!
//! Every grid cell is split along its lower-left to upper-right diagonal.
//! Edges carry the topology needed by DG assembly: the "left" triangle is
//! the one in whose counterclockwise traversal the edge runs from `v[0]` to
//! `v[1]`, and the stored unit normal points out of it (into the right
//! triangle for interior edges).

use std::collections::HashMap;

use crate::error::{arg, Result};

pub type Point = [f64; 2];

/// Side of the bounding rectangle a boundary edge lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub v: [usize; 2],
    pub left: usize,
    /// `None` on the domain boundary.
    pub right: Option<usize>,
    /// Unit normal, outward for the left triangle.
    pub normal: [f64; 2],
    /// Edge length `h_E`.
    pub length: f64,
    pub boundary: Option<Side>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Vertex indices, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Element diameters `h_K` (longest edge).
    pub diameters: Vec<f64>,
    pub areas: Vec<f64>,
    pub bounds: [f64; 4],
}

impl Mesh {
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of piecewise-linear DG unknowns, three per triangle.
    pub fn num_dofs(&self) -> usize {
        3 * self.triangles.len()
    }

    /// Mesh size `h = max h_K`.
    pub fn h(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].v;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Area of the bounding rectangle.
    pub fn domain_area(&self) -> f64 {
        let [x0, x1, y0, y1] = self.bounds;
        (x1 - x0) * (y1 - y0)
    }
}

fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Triangulates `[x_lo,x_hi] x [y_lo,y_hi]` with `nx * ny` cells, two triangles each.
pub fn build_rect_mesh(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return arg(format!("cell counts must be positive, got nx={nx}, ny={ny}"));
    }
    if !(x_lo < x_hi && y_lo < y_hi) || ![x_lo, x_hi, y_lo, y_hi].iter().all(|v| v.is_finite()) {
        return arg(format!("invalid rectangle [{x_lo},{x_hi}]x[{y_lo},{y_hi}]"));
    }
    let dx = (x_hi - x_lo) / nx as f64;
    let dy = (y_hi - y_lo) / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Snap the last row/column exactly onto the bounds.
            let x = if i == nx { x_hi } else { x_lo + i as f64 * dx };
            let y = if j == ny { y_hi } else { y_lo + j as f64 * dy };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut edges: Vec<Edge> = Vec::new();
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut areas = Vec::with_capacity(triangles.len());
    let mut diameters = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        areas.push(signed_area(p));
        diameters.push(dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0])));
        for l in 0..3 {
            let (a, b) = (tri[l], tri[(l + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                Some(&e) => edges[e].right = Some(t),
                None => {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let length = dist(pa, pb);
                    let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                    lookup.insert(key, edges.len());
                    edges.push(Edge { v: [a, b], left: t, right: None, normal, length, boundary: None });
                }
            }
        }
    }
    for e in edges.iter_mut().filter(|e| e.right.is_none()) {
        e.boundary = Some(match e.normal {
            [nx, _] if nx > 0.5 => Side::Right,
            [nx, _] if nx < -0.5 => Side::Left,
            [_, ny] if ny > 0.5 => Side::Top,
            _ => Side::Bottom,
        });
    }
    Ok(Mesh { vertices, triangles, edges, diameters, areas, bounds: [x_lo, x_hi, y_lo, y_hi] })
}

/// Upwind classification of every edge against a velocity field.
///
/// Stores `b(m_E) . n_E` with `n_E` the edge normal (outward for the left
/// triangle). An edge is inflow for an element `K` iff `b . n_K < 0`; zero
/// flux counts as outflow.
#[derive(Clone, Debug)]
pub struct EdgeClassification {
    pub flux: Vec<f64>,
}

impl EdgeClassification {
    pub fn inflow_for_left(&self, e: usize) -> bool {
        self.flux[e] < 0.0
    }

    pub fn inflow_for_right(&self, e: usize) -> bool {
        self.flux[e] > 0.0
    }

    /// Whether boundary edge `e` belongs to the inflow boundary.
    pub fn boundary_inflow(&self, e: usize) -> bool {
        self.inflow_for_left(e)
    }
}

pub fn classify_edges(mesh: &Mesh, velocity: impl Fn(Point) -> [f64; 2]) -> EdgeClassification {
    let flux = (0..mesh.edges.len())
        .map(|e| {
            let b = velocity(mesh.edge_midpoint(e));
            let n = mesh.edges[e].normal;
            b[0] * n[0] + b[1] * n[1]
        })
        .collect();
    EdgeClassification { flux }
}
