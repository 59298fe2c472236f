use faer::Mat;

use crate::chaos::ChaosBasis;
use crate::error::{arg, Result};
use crate::lowrank::LowRankMatrix;
use crate::mesh::{Mesh, Point};

/// Mean and variance per DG node.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentFields {
    pub coords: Vec<Point>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Vertex of each DG degree of freedom, `dof = 3 t + i`.
pub fn dof_coordinates(mesh: &Mesh) -> Vec<Point> {
    mesh.triangles.iter().flat_map(|t| t.iter().map(|&v| mesh.vertices[v])).collect()
}

/// Mean is the first chaos coefficient; variance sums the squares of the
/// others. With `V_1` the rows of `V` past the first and `V_1 = Q R`, the
/// variance is the squared row norm of `W R^T`.
pub fn compute_moments(u: &LowRankMatrix, basis: &ChaosBasis, mesh: &Mesh) -> Result<MomentFields> {
    let (nd, p) = (u.nrows(), u.ncols());
    if p != basis.size() || nd != mesh.num_dofs() {
        return arg(format!(
            "solution is {nd}x{p}, expected {}x{}",
            mesh.num_dofs(),
            basis.size()
        ));
    }
    let (w, v) = (u.w(), u.v());
    let r = w.ncols();
    let mean = (0..nd).map(|i| (0..r).map(|j| w[(i, j)] * v[(0, j)]).sum()).collect();
    let variance = if p > 1 && r > 0 {
        let v1 = v.subrows(1, p - 1);
        let rf = v1.qr().thin_R().to_owned();
        let wr: Mat<f64> = w * rf.transpose();
        (0..nd).map(|i| (0..wr.ncols()).map(|j| wr[(i, j)] * wr[(i, j)]).sum()).collect()
    } else {
        vec![0.0; nd]
    };
    Ok(MomentFields { coords: dof_coordinates(mesh), mean, variance })
}
