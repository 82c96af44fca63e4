//! Tetrahedral meshes with oriented face topology.
//!
//! Every face carries a fixed unit normal `n_f` equal to the outward normal of
//! its owner, the incident tetrahedron with the smaller index. Jumps are taken
//! as `owner trace - neighbor trace`; on boundary faces jump and average both
//! reduce to the owner trace.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Local face `i` is the facet opposite local vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Clone, Debug, PartialEq)]
pub struct FaceRecord {
    /// Sorted global vertex indices.
    pub vertex_ids: [usize; 3],
    pub owner: usize,
    /// Local face index of this face inside the owner.
    pub owner_local: usize,
    pub neighbor: Option<usize>,
    pub neighbor_local: Option<usize>,
    /// Unit normal, outward with respect to the owner.
    pub normal: Vec3,
    pub area: f64,
    /// Face diameter (longest edge).
    pub h_f: f64,
}

impl FaceRecord {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

/// Affine map `x = origin + jac * xref` from the reference tetrahedron
/// `(0,0,0),(1,0,0),(0,1,0),(0,0,1)`.
#[derive(Clone, Copy, Debug)]
pub struct TetGeometry {
    pub origin: Vec3,
    pub jac: Mat3,
    pub jac_inv: Mat3,
    pub det: f64,
}

impl TetGeometry {
    pub fn from_vertices(v: &[Vec3; 4]) -> Option<Self> {
        let jac = Mat3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let det = jac.determinant();
        let jac_inv = jac.try_inverse()?;
        Some(TetGeometry {
            origin: v[0],
            jac,
            jac_inv,
            det,
        })
    }

    pub fn to_physical(&self, xref: &Vec3) -> Vec3 {
        self.origin + self.jac * xref
    }

    pub fn to_reference(&self, x: &Vec3) -> Vec3 {
        self.jac_inv * (x - self.origin)
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / 6.0
    }
}

/// Which axis-aligned boundary planes a point lies on, one bit per axis.
pub type AxisMask = u8;

#[derive(Clone, Debug)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    /// Positively oriented vertex quadruples.
    pub tets: Vec<[usize; 4]>,
    pub faces: Vec<FaceRecord>,
    /// Global face index of each local face.
    pub tet_faces: Vec<[usize; 4]>,
    /// Per-tet diameter (longest edge).
    pub h_tet: Vec<f64>,
    /// Per-vertex mask of axis-aligned boundary planes the vertex lies on.
    pub boundary_axes: Vec<AxisMask>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshMetrics {
    pub h_max: f64,
    pub h_min: f64,
    pub h_mean: f64,
    /// max over tets of diameter / inradius
    pub shape_regularity: f64,
}

fn tet_signed_volume(p: &[Vec3; 4]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}

fn longest_edge(points: &[Vec3]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            h = h.max((points[i] - points[j]).norm());
        }
    }
    h
}

impl TetMesh {
    /// Builds a mesh from raw vertices and tets, reorienting negatively
    /// oriented tets and building the face topology.
    pub fn from_parts(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        for (t, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= vertices.len() {
                    return Err(Error::Consistency(format!(
                        "tet {t} references vertex {v} but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            let p = tet.map(|v| vertices[v]);
            let vol = tet_signed_volume(&p);
            let h = longest_edge(&p);
            if vol.abs() <= 1e-14 * h.powi(3) {
                return Err(Error::DegenerateElement(t));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }
        let h_tet = tets
            .iter()
            .map(|tet| longest_edge(&tet.map(|v| vertices[v])))
            .collect();
        let mut mesh = TetMesh {
            boundary_axes: vec![0; vertices.len()],
            vertices,
            tets,
            faces: Vec::new(),
            tet_faces: Vec::new(),
            h_tet,
        };
        mesh.build_faces()?;
        Ok(mesh)
    }

    /// Conforming Kuhn (Freudenthal) triangulation of the unit cube with
    /// `n` cells per axis, 6 tets per cell sharing the cell's main diagonal.
    pub fn structured_cube(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("mesh.structured_n", "must be at least 1"));
        }
        let np = n + 1;
        let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let mut vertices = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    vertices.push(Vec3::new(
                        i as f64 / n as f64,
                        j as f64 / n as f64,
                        k as f64 / n as f64,
                    ));
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut tets = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let corner = |b: [usize; 3]| idx(i + b[0], j + b[1], k + b[2]);
                    for perm in PERMS {
                        let mut b = [0usize; 3];
                        let mut tet = [corner(b), 0, 0, 0];
                        for (slot, &axis) in perm.iter().enumerate() {
                            b[axis] = 1;
                            tet[slot + 1] = corner(b);
                        }
                        tets.push(tet);
                    }
                }
            }
        }
        Self::from_parts(vertices, tets)
    }

    /// Enumerates faces by sorted vertex triple, assigns owner/neighbor and
    /// the fixed normals, and records the boundary-plane membership of
    /// vertices.
    pub fn build_faces(&mut self) -> Result<()> {
        let mut incidence: BTreeMap<[usize; 3], Vec<(usize, usize)>> = BTreeMap::new();
        for (t, tet) in self.tets.iter().enumerate() {
            for (lf, local) in LOCAL_FACES.iter().enumerate() {
                let mut key = local.map(|i| tet[i]);
                key.sort_unstable();
                incidence.entry(key).or_default().push((t, lf));
            }
        }
        let mut faces = Vec::with_capacity(incidence.len());
        let mut tet_faces = vec![[usize::MAX; 4]; self.tets.len()];
        for (key, inc) in incidence {
            if inc.len() > 2 {
                return Err(Error::NonConforming {
                    face: key,
                    count: inc.len(),
                });
            }
            let (owner, owner_local) = inc[0];
            let (neighbor, neighbor_local) = match inc.get(1) {
                Some(&(t, lf)) => (Some(t), Some(lf)),
                None => (None, None),
            };
            let fid = faces.len();
            tet_faces[owner][owner_local] = fid;
            if let (Some(t), Some(lf)) = (neighbor, neighbor_local) {
                tet_faces[t][lf] = fid;
            }
            let p = key.map(|v| self.vertices[v]);
            let normal = self.outward_normal(owner, owner_local);
            let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            faces.push(FaceRecord {
                vertex_ids: key,
                owner,
                owner_local,
                neighbor,
                neighbor_local,
                normal,
                area,
                h_f: longest_edge(&p),
            });
        }
        self.boundary_axes = vec![0; self.vertices.len()];
        for f in faces.iter().filter(|f| f.is_boundary()) {
            if let Some(axis) = axis_of(&f.normal) {
                for &v in &f.vertex_ids {
                    self.boundary_axes[v] |= 1 << axis;
                }
            }
        }
        self.faces = faces;
        self.tet_faces = tet_faces;
        Ok(())
    }

    /// Unit outward normal of local face `lf` of tet `t`.
    pub fn outward_normal(&self, t: usize, lf: usize) -> Vec3 {
        let tet = &self.tets[t];
        let [a, b, c] = LOCAL_FACES[lf].map(|i| self.vertices[tet[i]]);
        let opposite = self.vertices[tet[lf]];
        let n = (b - a).cross(&(c - a)).normalize();
        if n.dot(&(opposite - a)) > 0.0 {
            -n
        } else {
            n
        }
    }

    pub fn geometry(&self, t: usize) -> TetGeometry {
        let v = self.tets[t].map(|i| self.vertices[i]);
        // `from_parts` already rejected degenerate tets.
        TetGeometry::from_vertices(&v).expect("non-degenerate tet")
    }

    pub fn volume(&self, t: usize) -> f64 {
        tet_signed_volume(&self.tets[t].map(|i| self.vertices[i]))
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, &FaceRecord)> {
        self.faces.iter().enumerate().filter(|(_, f)| !f.is_boundary())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, &FaceRecord)> {
        self.faces.iter().enumerate().filter(|(_, f)| f.is_boundary())
    }

    /// Sign relating the outward normal of `t` on local face `lf` to `n_f`.
    pub fn face_sign(&self, t: usize, lf: usize) -> f64 {
        if self.faces[self.tet_faces[t][lf]].owner == t {
            1.0
        } else {
            -1.0
        }
    }

    pub fn face_vertices(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].vertex_ids.map(|v| self.vertices[v])
    }

    pub fn metrics(&self) -> Result<MeshMetrics> {
        let mut shape: f64 = 0.0;
        for t in 0..self.num_tets() {
            let vol = self.volume(t);
            let surface: f64 = (0..4)
                .map(|lf| {
                    let [a, b, c] = LOCAL_FACES[lf].map(|i| self.vertices[self.tets[t][i]]);
                    0.5 * (b - a).cross(&(c - a)).norm()
                })
                .sum();
            let rho = 3.0 * vol / surface;
            if rho < 1e-14 * self.h_tet[t] {
                return Err(Error::DegenerateElement(t));
            }
            shape = shape.max(self.h_tet[t] / rho);
        }
        let h_max = self.h_tet.iter().copied().fold(0.0, f64::max);
        let h_min = self.h_tet.iter().copied().fold(f64::INFINITY, f64::min);
        let h_mean = self.h_tet.iter().sum::<f64>() / self.num_tets() as f64;
        Ok(MeshMetrics {
            h_max,
            h_min,
            h_mean,
            shape_regularity: shape,
        })
    }

    /// Plain-text dump, one vertex or tet per line.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{} {} {}", v.x, v.y, v.z).unwrap();
        }
        writeln!(s, "tets {}", self.tets.len()).unwrap();
        for t in &self.tets {
            writeln!(s, "{} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let mut lines = data_lines(text);
        let count = |lines: &mut dyn Iterator<Item = (usize, Vec<&str>)>, tag: &str| {
            let (line, tok) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing '{tag}' header"),
            })?;
            if tok.len() != 2 || tok[0] != tag {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected '{tag} <count>'"),
                });
            }
            parse_num::<usize>(tok[1], line)
        };
        let nv = count(&mut lines, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, tok) = next_record(&mut lines, 3)?;
            vertices.push(Vec3::new(
                parse_num(tok[0], line)?,
                parse_num(tok[1], line)?,
                parse_num(tok[2], line)?,
            ));
        }
        let nt = count(&mut lines, "tets")?;
        let mut tets = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (line, tok) = next_record(&mut lines, 4)?;
            let mut tet = [0; 4];
            for (slot, s) in tet.iter_mut().zip(&tok) {
                *slot = parse_num(s, line)?;
            }
            tets.push(tet);
        }
        Self::from_parts(vertices, tets)
    }

    /// tetgen ASCII `.node` and `.ele` texts, zero-based.
    pub fn to_tetgen(&self) -> (String, String) {
        let mut node = String::new();
        writeln!(node, "{} 3 0 0", self.vertices.len()).unwrap();
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(node, "{i} {} {} {}", v.x, v.y, v.z).unwrap();
        }
        let mut ele = String::new();
        writeln!(ele, "{} 4 0", self.tets.len()).unwrap();
        for (i, t) in self.tets.iter().enumerate() {
            writeln!(ele, "{i} {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
        }
        (node, ele)
    }

    /// Parses tetgen `.node`/`.ele` texts. The index base (0 or 1) is taken
    /// from the first node index; attribute and marker columns are ignored.
    pub fn load_tetgen(node_text: &str, ele_text: &str) -> Result<Self> {
        let mut lines = data_lines(node_text);
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty .node file".into(),
        })?;
        if header.len() < 2 {
            return Err(Error::Parse {
                line,
                msg: "malformed .node header, expected '<count> <dim> [attrs] [markers]'".into(),
            });
        }
        let nv: usize = parse_num(header[0], line)?;
        let dim: usize = parse_num(header[1], line)?;
        if dim != 3 {
            return Err(Error::UnsupportedFormat(format!(
                ".node dimension {dim}, only 3 is supported"
            )));
        }
        let mut base = None;
        let mut vertices = Vec::with_capacity(nv);
        for i in 0..nv {
            let (line, tok) = next_record(&mut lines, 4)?;
            let id: usize = parse_num(tok[0], line)?;
            let b = *base.get_or_insert(id);
            if b > 1 {
                return Err(Error::Parse {
                    line,
                    msg: format!("first node index must be 0 or 1, found {b}"),
                });
            }
            if id != b + i {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected node index {}, found {id}", b + i),
                });
            }
            vertices.push(Vec3::new(
                parse_num(tok[1], line)?,
                parse_num(tok[2], line)?,
                parse_num(tok[3], line)?,
            ));
        }
        let base = base.unwrap_or(0);

        let mut lines = data_lines(ele_text);
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty .ele file".into(),
        })?;
        if header.len() < 2 {
            return Err(Error::Parse {
                line,
                msg: "malformed .ele header, expected '<count> <nodes per tet> [attrs]'".into(),
            });
        }
        let nt: usize = parse_num(header[0], line)?;
        let per: usize = parse_num(header[1], line)?;
        if per != 4 {
            return Err(Error::UnsupportedFormat(format!(
                "{per} nodes per tetrahedron, only linear (4) tets are supported"
            )));
        }
        let mut tets = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (line, tok) = next_record(&mut lines, 5)?;
            let mut tet = [0; 4];
            for (slot, s) in tet.iter_mut().zip(&tok[1..5]) {
                let id: usize = parse_num(s, line)?;
                if id < base || id - base >= nv {
                    return Err(Error::Consistency(format!(
                        "line {line}: tet references node {id}, which does not exist"
                    )));
                }
                *slot = id - base;
            }
            tets.push(tet);
        }
        Self::from_parts(vertices, tets)
    }
}

/// Index of the coordinate axis `n` is aligned with, if any.
pub fn axis_of(n: &Vec3) -> Option<usize> {
    (0..3).find(|&a| (n[a].abs() - 1.0).abs() < 1e-12)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let tok: Vec<&str> = l.split_whitespace().collect();
        (!tok.is_empty()).then_some((i + 1, tok))
    })
}

fn next_record<'a>(
    lines: &mut dyn Iterator<Item = (usize, Vec<&'a str>)>,
    min_len: usize,
) -> Result<(usize, Vec<&'a str>)> {
    let (line, tok) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "unexpected end of file".into(),
    })?;
    if tok.len() < min_len {
        return Err(Error::Parse {
            line,
            msg: format!("expected at least {min_len} columns, found {}", tok.len()),
        });
    }
    Ok((line, tok))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse '{s}' as a number"),
    })
}
