use std::sync::Arc;

use nalgebra::DMatrix;

use super::{
    eval_monomials_2d, eval_monomials_3d, monomial_exponents_2d, monomial_exponents_3d,
    orthonormalizer, BasisEval,
};
use crate::error::{Error, Result};
use crate::mesh::{TetGeometry, TetMesh, LOCAL_FACES};
use crate::quadrature::{tet_rule, tri_rule};
use crate::{Mat3, Vec3};

/// Contravariant Piola transform of a reference value and reference gradient.
pub fn piola(geom: &TetGeometry, v: &Vec3, grad: &Mat3) -> (Vec3, Mat3) {
    let inv_det = 1.0 / geom.det;
    (
        geom.jac * v * inv_det,
        geom.jac * grad * geom.jac_inv * inv_det,
    )
}

/// Lowest-order Nedelec (first kind) functions on the reference tet, used as
/// interior moment weights for k = 2.
fn nedelec_lowest(m: usize, x: &Vec3) -> Vec3 {
    let e = |i: usize| Vec3::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
    if m < 3 {
        e(m)
    } else {
        e(m - 3).cross(x)
    }
}

/// Geometry a face-moment functional is built from: the face vertices in
/// ascending global order, its fixed normal and its area.
struct FaceFrame {
    verts: [Vec3; 3],
    normal: Vec3,
    area: f64,
}

/// Polynomial data shared by the reference element and every mesh element.
#[derive(Clone, Debug)]
struct BdmTables {
    k: usize,
    exps: Vec<[i32; 3]>,
    face_exps: Vec<[i32; 2]>,
    /// Orthonormalizes the face monomials on the reference triangle.
    face_ortho: DMatrix<f64>,
    nint: usize,
}

impl BdmTables {
    fn new(k: usize) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::UnsupportedOrder(k));
        }
        let face_exps = monomial_exponents_2d(k);
        let rule = tri_rule(2 * k)?;
        let n = face_exps.len();
        let mut gram = DMatrix::zeros(n, n);
        for (p, w) in rule.iter() {
            let m = eval_monomials_2d(&face_exps, p[0], p[1]);
            for a in 0..n {
                for b in 0..n {
                    gram[(a, b)] += w * m[a] * m[b];
                }
            }
        }
        Ok(BdmTables {
            k,
            exps: monomial_exponents_3d(k),
            face_exps,
            face_ortho: orthonormalizer(gram),
            nint: if k == 2 { 6 } else { 0 },
        })
    }

    fn np(&self) -> usize {
        self.exps.len()
    }

    fn nfd(&self) -> usize {
        self.face_exps.len()
    }

    fn nloc(&self) -> usize {
        4 * self.nfd() + self.nint
    }

    /// Orthonormal face polynomials at parameter `(s, t)` on a face of the
    /// given area.
    fn face_polys(&self, s: f64, t: f64, area: f64) -> Vec<f64> {
        let m = eval_monomials_2d(&self.face_exps, s, t);
        let scale = 1.0 / (2.0 * area).sqrt();
        (0..self.nfd())
            .map(|j| scale * (0..=j).map(|a| self.face_ortho[(j, a)] * m[a]).sum::<f64>())
            .collect()
    }

    /// Monomial coefficients (rows `c * np + a`) of the element basis dual
    /// to the face and interior moments.
    fn element_coeffs(&self, geom: &TetGeometry, frames: &[FaceFrame; 4]) -> Option<DMatrix<f64>> {
        let np = self.np();
        let nfd = self.nfd();
        let n = self.nloc();
        let mut dmat = DMatrix::zeros(n, n);
        let mut mv = vec![0.0; np];
        let mut mg = vec![Vec3::zeros(); np];
        let rule = tri_rule(2 * self.k).ok()?;
        for (lf, frame) in frames.iter().enumerate() {
            let e1 = frame.verts[1] - frame.verts[0];
            let e2 = frame.verts[2] - frame.verts[0];
            let jn = geom.jac.transpose() * frame.normal / geom.det;
            for (p, w) in rule.iter() {
                let x = frame.verts[0] + p[0] * e1 + p[1] * e2;
                let w = w * 2.0 * frame.area;
                let q = self.face_polys(p[0], p[1], frame.area);
                eval_monomials_3d(&self.exps, &geom.to_reference(&x), &mut mv, &mut mg);
                for j in 0..nfd {
                    let row = lf * nfd + j;
                    for c in 0..3 {
                        for a in 0..np {
                            dmat[(row, c * np + a)] += w * jn[c] * mv[a] * q[j];
                        }
                    }
                }
            }
        }
        if self.nint > 0 {
            let rule = tet_rule(self.k + 1).ok()?;
            for (p, w) in rule.iter() {
                let xr = Vec3::from(*p);
                eval_monomials_3d(&self.exps, &xr, &mut mv, &mut mg);
                for m in 0..self.nint {
                    let wm = nedelec_lowest(m, &xr);
                    for c in 0..3 {
                        for a in 0..np {
                            dmat[(4 * nfd + m, c * np + a)] += w * mv[a] * wm[c];
                        }
                    }
                }
            }
        }
        dmat.try_inverse()
    }

    fn eval(&self, coeffs: &DMatrix<f64>, geom: &TetGeometry, xref: &Vec3, out: &mut BasisEval) {
        let np = self.np();
        let mut mv = [0.0; 10];
        let mut mg = [Vec3::zeros(); 10];
        eval_monomials_3d(&self.exps, xref, &mut mv[..np], &mut mg[..np]);
        let n = self.nloc();
        out.values.resize(n, Vec3::zeros());
        out.grads.resize(n, Mat3::zeros());
        for i in 0..n {
            let col = coeffs.column(i);
            let mut w = Vec3::zeros();
            let mut gw = Mat3::zeros();
            for c in 0..3 {
                for a in 0..np {
                    let coef = col[c * np + a];
                    w[c] += coef * mv[a];
                    gw[(c, 0)] += coef * mg[a].x;
                    gw[(c, 1)] += coef * mg[a].y;
                    gw[(c, 2)] += coef * mg[a].z;
                }
            }
            let (v, g) = piola(geom, &w, &gw);
            out.values[i] = v;
            out.grads[i] = g;
        }
    }
}

/// BDM element on the reference tetrahedron, dual to reference face moments
/// (outward normals, faces parametrized by ascending local vertices) and, for
/// k = 2, interior Nedelec moments.
#[derive(Clone, Debug)]
pub struct BdmReference {
    tables: BdmTables,
    coeffs: DMatrix<f64>,
    geom: TetGeometry,
}

impl BdmReference {
    pub fn new(k: usize) -> Result<Self> {
        let tables = BdmTables::new(k)?;
        let verts = [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let geom = TetGeometry::from_vertices(&verts).expect("reference tet");
        let frames = std::array::from_fn(|lf| reference_frame(&verts, lf));
        let coeffs = tables
            .element_coeffs(&geom, &frames)
            .ok_or(Error::DegenerateElement(0))?;
        Ok(BdmReference {
            tables,
            coeffs,
            geom,
        })
    }

    pub fn degree(&self) -> usize {
        self.tables.k
    }

    pub fn num_dofs(&self) -> usize {
        self.tables.nloc()
    }

    pub fn dofs_per_face(&self) -> usize {
        self.tables.nfd()
    }

    pub fn eval(&self, xref: &Vec3) -> BasisEval {
        let mut out = BasisEval::default();
        self.tables.eval(&self.coeffs, &self.geom, xref, &mut out);
        out
    }

    /// Orthonormal moment weights on reference face `lf` at face parameter
    /// `(s, t)`.
    pub fn face_weights(&self, lf: usize, s: f64, t: f64) -> Vec<f64> {
        let verts = reference_vertices();
        self.tables.face_polys(s, t, reference_frame(&verts, lf).area)
    }
}

fn reference_vertices() -> [Vec3; 4] {
    [
        Vec3::zeros(),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ]
}

fn reference_frame(verts: &[Vec3; 4], lf: usize) -> FaceFrame {
    let [a, b, c] = LOCAL_FACES[lf].map(|i| verts[i]);
    let cross = (b - a).cross(&(c - a));
    let mut normal = cross.normalize();
    if normal.dot(&(verts[lf] - a)) > 0.0 {
        normal = -normal;
    }
    FaceFrame {
        verts: [a, b, c],
        normal,
        area: 0.5 * cross.norm(),
    }
}

/// Moment weights of one face at one quadrature point.
#[derive(Clone, Debug)]
pub struct FaceMomentPoint {
    pub x: Vec3,
    pub weight: f64,
    /// Orthonormal face polynomials, one per face DOF.
    pub polys: Vec<f64>,
}

/// H(div)-conforming BDM_k velocity space, k = 1 or 2.
///
/// Global DOFs are the face moments `int_f (v . n_f) q_j` against an
/// orthonormal basis `q_j` of `P_k(f)` built from the face's own geometry,
/// followed by (k = 2) six interior moments per element. Both tets sharing a
/// face therefore evaluate the same functional and normal traces match.
#[derive(Clone, Debug)]
pub struct BdmSpace {
    mesh: Arc<TetMesh>,
    tables: BdmTables,
    geoms: Vec<TetGeometry>,
    coeffs: Vec<DMatrix<f64>>,
}

impl BdmSpace {
    pub fn new(mesh: Arc<TetMesh>, k: usize) -> Result<Self> {
        let tables = BdmTables::new(k)?;
        let mut geoms = Vec::with_capacity(mesh.num_tets());
        let mut coeffs = Vec::with_capacity(mesh.num_tets());
        for t in 0..mesh.num_tets() {
            let geom = mesh.geometry(t);
            let frames = std::array::from_fn(|lf| {
                let f = &mesh.faces[mesh.tet_faces[t][lf]];
                FaceFrame {
                    verts: f.vertex_ids.map(|v| mesh.vertices[v]),
                    normal: f.normal,
                    area: f.area,
                }
            });
            let c = tables
                .element_coeffs(&geom, &frames)
                .ok_or(Error::DegenerateElement(t))?;
            geoms.push(geom);
            coeffs.push(c);
        }
        Ok(BdmSpace {
            mesh,
            tables,
            geoms,
            coeffs,
        })
    }

    pub fn mesh(&self) -> &Arc<TetMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.tables.k
    }

    pub fn dofs_per_face(&self) -> usize {
        self.tables.nfd()
    }

    pub fn interior_dofs_per_tet(&self) -> usize {
        self.tables.nint
    }

    pub fn local_dim(&self) -> usize {
        self.tables.nloc()
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_faces() * self.tables.nfd() + self.mesh.num_tets() * self.tables.nint
    }

    pub fn geometry(&self, t: usize) -> &TetGeometry {
        &self.geoms[t]
    }

    /// Global DOF index of the `j`-th moment on face `f`.
    pub fn face_dof(&self, f: usize, j: usize) -> usize {
        f * self.tables.nfd() + j
    }

    /// Global DOFs of tet `t` in local order (faces 0..4, then interior).
    pub fn local_dofs(&self, t: usize) -> Vec<usize> {
        let nfd = self.tables.nfd();
        let mut out = Vec::with_capacity(self.local_dim());
        for lf in 0..4 {
            let f = self.mesh.tet_faces[t][lf];
            out.extend((0..nfd).map(|j| self.face_dof(f, j)));
        }
        let base = self.mesh.num_faces() * nfd + t * self.tables.nint;
        out.extend(base..base + self.tables.nint);
        out
    }

    /// Physical basis values and gradients of tet `t` at a reference point.
    pub fn eval(&self, t: usize, xref: &Vec3, out: &mut BasisEval) {
        self.tables.eval(&self.coeffs[t], &self.geoms[t], xref, out);
    }

    pub fn eval_at(&self, t: usize, x: &Vec3, out: &mut BasisEval) {
        let xr = self.geoms[t].to_reference(x);
        self.eval(t, &xr, out);
    }

    /// Value and gradient of the discrete field `coeffs` on tet `t` at the
    /// physical point `x`.
    pub fn field_at(&self, coeffs: &[f64], t: usize, x: &Vec3, scratch: &mut BasisEval) -> (Vec3, Mat3) {
        self.eval_at(t, x, scratch);
        let dofs = self.local_dofs(t);
        scratch.combine(dofs.iter().map(|&d| coeffs[d]))
    }

    /// Quadrature points of face `f` with the orthonormal moment weights.
    pub fn face_moment_points(&self, f: usize, degree: usize) -> Result<Vec<FaceMomentPoint>> {
        let rec = &self.mesh.faces[f];
        let p = self.mesh.face_vertices(f);
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let rule = tri_rule(degree)?;
        Ok(rule
            .iter()
            .map(|(st, w)| FaceMomentPoint {
                x: p[0] + st[0] * e1 + st[1] * e2,
                weight: w * 2.0 * rec.area,
                polys: self.tables.face_polys(st[0], st[1], rec.area),
            })
            .collect())
    }

    /// Face moments `int_f (g . n_f) q_j` of a vector field.
    pub fn normal_moments(
        &self,
        f: usize,
        field: &(dyn Fn(&Vec3) -> Vec3 + Sync),
        degree: usize,
    ) -> Result<Vec<f64>> {
        let n = self.mesh.faces[f].normal;
        let mut out = vec![0.0; self.tables.nfd()];
        for pt in self.face_moment_points(f, degree)? {
            let gn = field(&pt.x).dot(&n);
            for (o, q) in out.iter_mut().zip(&pt.polys) {
                *o += pt.weight * gn * q;
            }
        }
        Ok(out)
    }

    /// Interior moments `int_E v . (J^{-T} w_m)` on tet `t`.
    fn interior_moments(
        &self,
        t: usize,
        field: &(dyn Fn(&Vec3) -> Vec3 + Sync),
        degree: usize,
    ) -> Result<Vec<f64>> {
        let g = &self.geoms[t];
        let jit = g.jac_inv.transpose();
        let mut out = vec![0.0; self.tables.nint];
        for (p, w) in tet_rule(degree)?.iter() {
            let xr = Vec3::from(*p);
            let v = field(&g.to_physical(&xr));
            for (m, o) in out.iter_mut().enumerate() {
                *o += w * g.det * v.dot(&(jit * nedelec_lowest(m, &xr)));
            }
        }
        Ok(out)
    }

    /// Canonical BDM interpolant of a smooth field; moments are integrated
    /// with a rule exact to `degree`.
    pub fn interpolate(
        &self,
        field: &(dyn Fn(&Vec3) -> Vec3 + Sync),
        degree: usize,
    ) -> Result<Vec<f64>> {
        let mut coeffs = vec![0.0; self.num_dofs()];
        for f in 0..self.mesh.num_faces() {
            for (j, m) in self.normal_moments(f, field, degree)?.into_iter().enumerate() {
                coeffs[self.face_dof(f, j)] = m;
            }
        }
        if self.tables.nint > 0 {
            let base = self.mesh.num_faces() * self.tables.nfd();
            for t in 0..self.mesh.num_tets() {
                for (m, v) in self.interior_moments(t, field, degree)?.into_iter().enumerate() {
                    coeffs[base + t * self.tables.nint + m] = v;
                }
            }
        }
        Ok(coeffs)
    }

    /// DOF functionals of the element basis of tet `t`, evaluated through
    /// [`BdmSpace::eval`]; the identity for a unisolvent basis.
    pub fn local_dof_matrix(&self, t: usize) -> Result<DMatrix<f64>> {
        let n = self.local_dim();
        let nfd = self.tables.nfd();
        let mut out = DMatrix::zeros(n, n);
        let mut ev = BasisEval::default();
        for lf in 0..4 {
            let f = self.mesh.tet_faces[t][lf];
            let normal = self.mesh.faces[f].normal;
            for pt in self.face_moment_points(f, 2 * self.degree())? {
                self.eval_at(t, &pt.x, &mut ev);
                for j in 0..nfd {
                    for i in 0..n {
                        out[(lf * nfd + j, i)] += pt.weight * ev.values[i].dot(&normal) * pt.polys[j];
                    }
                }
            }
        }
        if self.tables.nint > 0 {
            let g = &self.geoms[t];
            let jit = g.jac_inv.transpose();
            for (p, w) in tet_rule(2 * self.degree() + 1)?.iter() {
                let xr = Vec3::from(*p);
                self.eval(t, &xr, &mut ev);
                for m in 0..self.tables.nint {
                    let wm = jit * nedelec_lowest(m, &xr);
                    for i in 0..n {
                        out[(4 * nfd + m, i)] += w * g.det * ev.values[i].dot(&wm);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Global DOFs carrying normal moments on boundary faces.
    pub fn boundary_dofs(&self) -> Vec<(usize, usize, usize)> {
        let nfd = self.tables.nfd();
        self.mesh
            .boundary_faces()
            .flat_map(|(f, _)| (0..nfd).map(move |j| (f * nfd + j, f, j)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::map_to_face;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_tet() -> Arc<TetMesh> {
        Arc::new(TetMesh::from_parts(reference_vertices().to_vec(), vec![[0, 1, 2, 3]]).unwrap())
    }

    #[test]
    fn dimensions() {
        let m = single_tet();
        assert_eq!(BdmSpace::new(m.clone(), 1).unwrap().num_dofs(), 12);
        let s2 = BdmSpace::new(m.clone(), 2).unwrap();
        assert_eq!(s2.num_dofs(), 30);
        assert_eq!(s2.local_dim(), 30);
        assert!(matches!(BdmSpace::new(m, 3), Err(Error::UnsupportedOrder(3))));
        let cube = Arc::new(TetMesh::structured_cube(1).unwrap());
        let s = BdmSpace::new(cube.clone(), 1).unwrap();
        assert_eq!(s.num_dofs(), 3 * cube.num_faces());
    }

    #[test]
    fn reference_dof_matrix_is_identity() {
        for k in 1..=2 {
            let m = single_tet();
            let s = BdmSpace::new(m, k).unwrap();
            let d = s.local_dof_matrix(0).unwrap();
            let err = (d - DMatrix::identity(s.local_dim(), s.local_dim())).amax();
            assert!(err < 1e-11, "k={k}: {err}");
        }
    }

    #[test]
    fn unisolvent_on_every_element() {
        let mesh = Arc::new(TetMesh::structured_cube(2).unwrap());
        for k in 1..=2 {
            let s = BdmSpace::new(mesh.clone(), k).unwrap();
            for t in 0..mesh.num_tets() {
                let d = s.local_dof_matrix(t).unwrap();
                let err = (d - DMatrix::identity(s.local_dim(), s.local_dim())).amax();
                assert!(err < 1e-11, "k={k} t={t}: {err}");
            }
        }
    }

    #[test]
    fn k1_divergence_is_constant() {
        let s = BdmSpace::new(single_tet(), 1).unwrap();
        let mut a = BasisEval::default();
        let mut b = BasisEval::default();
        s.eval(0, &Vec3::new(0.1, 0.2, 0.3), &mut a);
        s.eval(0, &Vec3::new(0.5, 0.1, 0.05), &mut b);
        for i in 0..12 {
            assert!((a.grads[i].trace() - b.grads[i].trace()).abs() < 1e-12);
        }
    }

    #[test]
    fn piola_preserves_normal_moments() {
        // Oracle: face quadrature of the mapped basis against the pulled-back
        // reference weights on the image face.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 1..=2 {
            let reference = BdmReference::new(k).unwrap();
            for _ in 0..5 {
                let verts = loop {
                    let v: [Vec3; 4] = std::array::from_fn(|_| {
                        Vec3::new(rng.random(), rng.random(), rng.random())
                    });
                    let g = TetGeometry::from_vertices(&v).unwrap();
                    if g.det > 0.05 {
                        break v;
                    }
                };
                let g = TetGeometry::from_vertices(&verts).unwrap();
                let rule = tri_rule(2 * k + 2).unwrap();
                for lf in 0..4 {
                    let rv = reference_vertices();
                    let [ra, rb, rc] = LOCAL_FACES[lf].map(|i| rv[i]);
                    let rframe = reference_frame(&rv, lf);
                    let [pa, pb, pc] = LOCAL_FACES[lf].map(|i| verts[i]);
                    let pframe = reference_frame(&verts, lf);
                    let phys = map_to_face(&rule, &[pa, pb, pc]);
                    let refp = map_to_face(&rule, &[ra, rb, rc]);
                    for i in 0..reference.num_dofs() {
                        for j in 0..reference.dofs_per_face() {
                            let mut mapped = 0.0;
                            let mut orig = 0.0;
                            for (q, (st, _)) in rule.iter().enumerate() {
                                let wq = reference.face_weights(lf, st[0], st[1]);
                                let ev = reference.eval(&refp[q].0);
                                let (v, _) = piola(&g, &ev.values[i], &ev.grads[i]);
                                mapped += phys[q].1 * v.dot(&pframe.normal) * wq[j];
                                orig += refp[q].1 * ev.values[i].dot(&rframe.normal) * wq[j];
                            }
                            assert!((mapped - orig).abs() < 1e-11, "k={k} lf={lf} i={i} j={j}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn normal_trace_is_continuous() {
        let mesh = Arc::new(TetMesh::structured_cube(2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=2 {
            let s = BdmSpace::new(mesh.clone(), k).unwrap();
            let coeffs: Vec<f64> = (0..s.num_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut ev = BasisEval::default();
            let mut tangential_gap: f64 = 0.0;
            for (f, rec) in mesh.interior_faces() {
                for pt in s.face_moment_points(f, 2 * k + 2).unwrap() {
                    let (a, _) = s.field_at(&coeffs, rec.owner, &pt.x, &mut ev);
                    let (b, _) = s.field_at(&coeffs, rec.neighbor.unwrap(), &pt.x, &mut ev);
                    assert!((a - b).dot(&rec.normal).abs() < 1e-11);
                    tangential_gap = tangential_gap.max((a - b).norm());
                }
            }
            // tangential components are genuinely discontinuous
            assert!(tangential_gap > 1e-3);
        }
    }

    #[test]
    fn interpolation_reproduces_space() {
        let mesh = Arc::new(TetMesh::structured_cube(1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 1..=2 {
            let s = BdmSpace::new(mesh.clone(), k).unwrap();
            // a global polynomial of degree k lies in the space
            let a: [f64; 9] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let field = move |x: &Vec3| {
                let q = if k == 2 { x.x * x.y } else { x.z };
                Vec3::new(a[0] + a[1] * x.y + a[6] * q, a[2] * x.x + a[3] + a[7] * q, a[4] * x.z + a[5] - a[8] * q)
            };
            let c = s.interpolate(&field, 8).unwrap();
            let mut ev = BasisEval::default();
            for t in 0..mesh.num_tets() {
                let x = mesh.geometry(t).to_physical(&Vec3::new(0.2, 0.3, 0.1));
                let (v, _) = s.field_at(&c, t, &x, &mut ev);
                assert!((v - field(&x)).norm() < 1e-12);
            }
            let c2 = s.interpolate(&|x: &Vec3| {
                let mut ev = BasisEval::default();
                let t = (0..mesh.num_tets())
                    .find(|&t| {
                        let r = mesh.geometry(t).to_reference(x);
                        r.min() > -1e-12 && r.sum() < 1.0 + 1e-12
                    })
                    .unwrap();
                s.field_at(&c, t, x, &mut ev).0
            }, 8).unwrap();
            for (p, q) in c.iter().zip(&c2) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_field_interpolant() {
        let mesh = Arc::new(TetMesh::structured_cube(2).unwrap());
        let s = BdmSpace::new(mesh.clone(), 1).unwrap();
        let c = s.interpolate(&|_: &Vec3| Vec3::new(1.0, 0.0, 0.0), 4).unwrap();
        let mut ev = BasisEval::default();
        for t in 0..mesh.num_tets() {
            let x = mesh.geometry(t).to_physical(&Vec3::new(0.25, 0.25, 0.25));
            let (v, g) = s.field_at(&c, t, &x, &mut ev);
            assert!((v - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
            assert!(g.trace().abs() < 1e-12);
        }
    }
}
