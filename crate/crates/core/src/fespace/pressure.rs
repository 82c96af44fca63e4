use std::sync::Arc;

use nalgebra::DMatrix;

use super::{eval_monomials_3d, monomial_exponents_3d, orthonormalizer};
use crate::error::{Error, Result};
use crate::mesh::{TetGeometry, TetMesh};
use crate::quadrature::tet_rule;
use crate::Vec3;

/// Discontinuous `P_{k-1}` pressures with an L2-orthonormal modal basis on
/// every element. Zero mean is not built into the space; it is enforced by
/// the mean-value functional [`PressureSpace::mean_functional`].
#[derive(Clone, Debug)]
pub struct PressureSpace {
    mesh: Arc<TetMesh>,
    degree: usize,
    exps: Vec<[i32; 3]>,
    /// Rows: reference modes as combinations of monomials.
    ortho: DMatrix<f64>,
    /// Integral of each reference mode over the reference tet.
    mode_integrals: Vec<f64>,
    geoms: Vec<TetGeometry>,
}

impl PressureSpace {
    /// Pressure space paired with velocity order `k`.
    pub fn new(mesh: Arc<TetMesh>, k: usize) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::UnsupportedOrder(k));
        }
        let degree = k - 1;
        let exps = monomial_exponents_3d(degree);
        let n = exps.len();
        let rule = tet_rule(2 * degree)?;
        let mut gram = DMatrix::zeros(n, n);
        let mut mv = vec![0.0; n];
        let mut mg = vec![Vec3::zeros(); n];
        for (p, w) in rule.iter() {
            eval_monomials_3d(&exps, &Vec3::from(*p), &mut mv, &mut mg);
            for a in 0..n {
                for b in 0..n {
                    gram[(a, b)] += w * mv[a] * mv[b];
                }
            }
        }
        let ortho = orthonormalizer(gram);
        let mut mode_integrals = vec![0.0; n];
        for (p, w) in tet_rule(degree)?.iter() {
            eval_monomials_3d(&exps, &Vec3::from(*p), &mut mv, &mut mg);
            for (i, m) in mode_integrals.iter_mut().enumerate() {
                *m += w * (0..n).map(|a| ortho[(i, a)] * mv[a]).sum::<f64>();
            }
        }
        let geoms = (0..mesh.num_tets()).map(|t| mesh.geometry(t)).collect();
        Ok(PressureSpace {
            mesh,
            degree,
            exps,
            ortho,
            mode_integrals,
            geoms,
        })
    }

    pub fn mesh(&self) -> &Arc<TetMesh> {
        &self.mesh
    }

    /// Polynomial degree `k - 1`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modes_per_tet(&self) -> usize {
        self.exps.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_tets() * self.modes_per_tet()
    }

    pub fn local_dofs(&self, t: usize) -> std::ops::Range<usize> {
        let n = self.modes_per_tet();
        t * n..(t + 1) * n
    }

    /// Physical basis values of tet `t` at a reference point.
    pub fn eval(&self, t: usize, xref: &Vec3, out: &mut Vec<f64>) {
        let n = self.modes_per_tet();
        let mut mv = [0.0; 4];
        let mut mg = [Vec3::zeros(); 4];
        eval_monomials_3d(&self.exps, xref, &mut mv[..n], &mut mg[..n]);
        let scale = 1.0 / self.geoms[t].det.abs().sqrt();
        out.clear();
        out.extend((0..n).map(|i| scale * (0..n).map(|a| self.ortho[(i, a)] * mv[a]).sum::<f64>()));
    }

    pub fn field_at(&self, coeffs: &[f64], t: usize, xref: &Vec3) -> f64 {
        let mut vals = Vec::new();
        self.eval(t, xref, &mut vals);
        self.local_dofs(t).zip(&vals).map(|(d, v)| coeffs[d] * v).sum()
    }

    /// Vector `m` with `m . p = int_Omega p_h`.
    pub fn mean_functional(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(self.num_dofs());
        for g in &self.geoms {
            let s = g.det.abs().sqrt();
            m.extend(self.mode_integrals.iter().map(|mi| mi * s));
        }
        m
    }

    /// Elementwise L2 projection; the basis is orthonormal so the
    /// coefficients are plain moments.
    pub fn project(&self, field: &(dyn Fn(&Vec3) -> f64 + Sync), degree: usize) -> Result<Vec<f64>> {
        let rule = tet_rule(degree)?;
        let mut out = vec![0.0; self.num_dofs()];
        let mut vals = Vec::new();
        for t in 0..self.mesh.num_tets() {
            let g = &self.geoms[t];
            for (p, w) in rule.iter() {
                let xr = Vec3::from(*p);
                let f = field(&g.to_physical(&xr));
                self.eval(t, &xr, &mut vals);
                for (d, v) in self.local_dofs(t).zip(&vals) {
                    out[d] += w * g.det.abs() * f * v;
                }
            }
        }
        Ok(out)
    }
}
