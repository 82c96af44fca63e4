//! Gauss-type quadrature on the reference triangle and tetrahedron.
//!
//! Rules are conical (Stroud) products of one-dimensional Gauss-Jacobi rules
//! in collapsed coordinates. A rule with `m` points per direction integrates
//! every polynomial of total degree `2m - 1` exactly. The one-dimensional
//! nodes come from the Golub-Welsch eigenvalue problem.
//!
//! Reference triangle: `(0,0),(1,0),(0,1)`, measure 1/2.
//! Reference tetrahedron: `(0,0,0),(1,0,0),(0,1,0),(0,0,1)`, measure 1/6.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mesh::TetGeometry;
use crate::Vec3;

/// Highest polynomial exactness offered by [`tet_rule`] and [`tri_rule`].
pub const MAX_DEGREE: usize = 24;

#[derive(Clone, Debug)]
pub struct QuadRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type TetRule = QuadRule<3>;
pub type TriRule = QuadRule<2>;

impl<const D: usize> QuadRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss-Jacobi rule with `m` points for the weight `(1 - t)^alpha` on
/// `[0, 1]`.
pub fn gauss_jacobi_unit(m: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    // Monic Jacobi recurrence on [-1, 1] with beta = 0.
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for n in 0..m {
        let nf = n as f64;
        let diag = if n == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * nf + ab) * (2.0 * nf + ab + 2.0))
        };
        jac[(n, n)] = diag;
        if n + 1 < m {
            let k = nf + 1.0;
            let s = 2.0 * k + ab;
            let b = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
            jac[(n, n + 1)] = b.sqrt();
            jac[(n + 1, n)] = b.sqrt();
        }
    }
    let eig = SymmetricEigen::new(jac);
    // integral of (1-t)^alpha over [-1, 1]
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // map to [0,1]: (1-t)^alpha dt -> 2^(alpha+1) (1-a)^alpha da
    let scale = 2f64.powf(alpha + 1.0);
    let nodes = pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect();
    let weights = pairs.iter().map(|p| p.1 / scale).collect();
    (nodes, weights)
}

fn points_per_direction(degree: usize) -> usize {
    degree / 2 + 1
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Rule on the reference tetrahedron exact up to total degree `degree`.
pub fn tet_rule(degree: usize) -> Result<TetRule> {
    check_degree(degree)?;
    let m = points_per_direction(degree);
    let (a, wa) = gauss_jacobi_unit(m, 2.0);
    let (b, wb) = gauss_jacobi_unit(m, 1.0);
    let (c, wc) = gauss_jacobi_unit(m, 0.0);
    let mut points = Vec::with_capacity(m * m * m);
    let mut weights = Vec::with_capacity(m * m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let x = a[i];
                let y = (1.0 - a[i]) * b[j];
                let z = (1.0 - a[i]) * (1.0 - b[j]) * c[k];
                points.push([x, y, z]);
                weights.push(wa[i] * wb[j] * wc[k]);
            }
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Rule on the reference triangle exact up to total degree `degree`.
pub fn tri_rule(degree: usize) -> Result<TriRule> {
    check_degree(degree)?;
    let m = points_per_direction(degree);
    let (a, wa) = gauss_jacobi_unit(m, 1.0);
    let (b, wb) = gauss_jacobi_unit(m, 0.0);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            points.push([a[i], (1.0 - a[i]) * b[j]]);
            weights.push(wa[i] * wb[j]);
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Physical points and weights of `rule` on an affine tetrahedron.
pub fn map_to_tet(rule: &TetRule, geom: &TetGeometry) -> Vec<(Vec3, f64)> {
    let det = geom.det.abs();
    rule.iter()
        .map(|(p, w)| (geom.to_physical(&Vec3::from(*p)), w * det))
        .collect()
}

/// Physical points and weights of `rule` on the triangle `(p0, p1, p2)`,
/// parametrized as `p0 + s (p1 - p0) + t (p2 - p0)`.
pub fn map_to_face(rule: &TriRule, p: &[Vec3; 3]) -> Vec<(Vec3, f64)> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let jac = e1.cross(&e2).norm();
    rule.iter()
        .map(|([s, t], w)| (p[0] + *s * e1 + *t * e2, w * jac))
        .collect()
}

/// Exact integral of `x^a y^b z^c` over the reference tetrahedron:
/// `a! b! c! / (a + b + c + 3)!`.
pub fn tet_monomial_integral(a: u32, b: u32, c: u32) -> f64 {
    factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
}

/// Exact integral of `x^a y^b` over the reference triangle:
/// `a! b! / (a + b + 2)!`.
pub fn tri_monomial_integral(a: u32, b: u32) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 2)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}
