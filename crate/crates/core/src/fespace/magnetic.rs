use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{axis_of, AxisMask, TetGeometry, TetMesh};
use crate::Vec3;

/// Local edge `i` of a tet joins these local vertices (P2 node order).
const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// One essential condition `B_axis(node) = value` on the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MagneticConstraint {
    pub dof: usize,
    pub node: usize,
    pub axis: usize,
}

/// Continuous vector Lagrange space of degree 1 or 2.
///
/// Nodes are the mesh vertices followed (k = 2) by edge midpoints; DOF
/// `3 * node + c` is component `c` at that node.
#[derive(Clone, Debug)]
pub struct LagrangeSpace {
    mesh: Arc<TetMesh>,
    k: usize,
    nodes: Vec<Vec3>,
    tet_nodes: Vec<Vec<usize>>,
    node_axes: Vec<AxisMask>,
    geoms: Vec<TetGeometry>,
}

impl LagrangeSpace {
    /// Fails on boundary faces that are not axis-aligned, where nodal
    /// normal constraints cannot be expressed componentwise.
    pub fn new(mesh: Arc<TetMesh>, k: usize) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::UnsupportedOrder(k));
        }
        let mut nodes = mesh.vertices.clone();
        let mut tet_nodes: Vec<Vec<usize>> = mesh.tets.iter().map(|t| t.to_vec()).collect();
        let mut edge_ids = BTreeMap::new();
        if k == 2 {
            for (t, tet) in mesh.tets.iter().enumerate() {
                for e in LOCAL_EDGES {
                    let (a, b) = (tet[e[0]], tet[e[1]]);
                    let key = (a.min(b), a.max(b));
                    let id = *edge_ids.entry(key).or_insert_with(|| {
                        nodes.push(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
                        nodes.len() - 1
                    });
                    tet_nodes[t].push(id);
                }
            }
        }
        let mut node_axes = vec![0; nodes.len()];
        for (f, rec) in mesh.boundary_faces() {
            let axis = axis_of(&rec.normal).ok_or_else(|| {
                Error::UnsupportedGeometry(format!(
                    "boundary face {f} with normal ({:.3}, {:.3}, {:.3}) is not axis-aligned",
                    rec.normal.x, rec.normal.y, rec.normal.z
                ))
            })?;
            let v = rec.vertex_ids;
            for &n in &v {
                node_axes[n] |= 1 << axis;
            }
            if k == 2 {
                for (a, b) in [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])] {
                    node_axes[edge_ids[&(a, b)]] |= 1 << axis;
                }
            }
        }
        let geoms = (0..mesh.num_tets()).map(|t| mesh.geometry(t)).collect();
        Ok(LagrangeSpace {
            mesh,
            k,
            nodes,
            tet_nodes,
            node_axes,
            geoms,
        })
    }

    pub fn mesh(&self) -> &Arc<TetMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_dofs(&self) -> usize {
        3 * self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn tet_nodes(&self, t: usize) -> &[usize] {
        &self.tet_nodes[t]
    }

    pub fn node_axes(&self, node: usize) -> AxisMask {
        self.node_axes[node]
    }

    pub fn geometry(&self, t: usize) -> &TetGeometry {
        &self.geoms[t]
    }

    /// Local DOFs of tet `t`, ordered `3 * local_node + c`.
    pub fn local_dofs(&self, t: usize) -> Vec<usize> {
        self.tet_nodes[t]
            .iter()
            .flat_map(|&n| (0..3).map(move |c| 3 * n + c))
            .collect()
    }

    /// Scalar shape functions and physical gradients at a reference point.
    pub fn shape(&self, t: usize, xref: &Vec3, val: &mut Vec<f64>, grad: &mut Vec<Vec3>) {
        let lam = [1.0 - xref.x - xref.y - xref.z, xref.x, xref.y, xref.z];
        let jit = self.geoms[t].jac_inv.transpose();
        let dlam = [
            jit * Vec3::new(-1.0, -1.0, -1.0),
            jit * Vec3::new(1.0, 0.0, 0.0),
            jit * Vec3::new(0.0, 1.0, 0.0),
            jit * Vec3::new(0.0, 0.0, 1.0),
        ];
        val.clear();
        grad.clear();
        if self.k == 1 {
            val.extend_from_slice(&lam);
            grad.extend_from_slice(&dlam);
        } else {
            for i in 0..4 {
                val.push(lam[i] * (2.0 * lam[i] - 1.0));
                grad.push((4.0 * lam[i] - 1.0) * dlam[i]);
            }
            for [a, b] in LOCAL_EDGES {
                val.push(4.0 * lam[a] * lam[b]);
                grad.push(4.0 * (lam[a] * dlam[b] + lam[b] * dlam[a]));
            }
        }
    }

    /// Nodal interpolant.
    pub fn interpolate(&self, field: &(dyn Fn(&Vec3) -> Vec3 + Sync)) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs()];
        for (n, x) in self.nodes.iter().enumerate() {
            let v = field(x);
            out[3 * n..3 * n + 3].copy_from_slice(v.as_slice());
        }
        out
    }

    /// Essential `B . n` conditions: one per boundary node and per axis
    /// normal to a boundary plane through it, in node order.
    pub fn constraints(&self) -> Vec<MagneticConstraint> {
        let mut out = Vec::new();
        for (node, &mask) in self.node_axes.iter().enumerate() {
            for axis in 0..3 {
                if mask & (1 << axis) != 0 {
                    out.push(MagneticConstraint {
                        dof: 3 * node + axis,
                        node,
                        axis,
                    });
                }
            }
        }
        out
    }

    /// Value and gradient of a discrete field on tet `t` at a reference point.
    pub fn field_at(&self, coeffs: &[f64], t: usize, xref: &Vec3) -> (Vec3, crate::Mat3) {
        let mut val = Vec::new();
        let mut grad = Vec::new();
        self.shape(t, xref, &mut val, &mut grad);
        let mut v = Vec3::zeros();
        let mut g = crate::Mat3::zeros();
        for (i, &n) in self.tet_nodes[t].iter().enumerate() {
            let c = Vec3::new(coeffs[3 * n], coeffs[3 * n + 1], coeffs[3 * n + 2]);
            v += val[i] * c;
            g += c * grad[i].transpose();
        }
        (v, g)
    }
}
