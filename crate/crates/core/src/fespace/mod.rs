//! Discrete spaces: BDM velocity, discontinuous pressure and continuous
//! vector Lagrange magnetic induction.

mod magnetic;
mod pressure;
mod velocity;

pub use magnetic::{LagrangeSpace, MagneticConstraint};
pub use pressure::PressureSpace;
pub use velocity::{BdmReference, BdmSpace, piola};

use nalgebra::DMatrix;

use crate::{Mat3, Vec3};

/// Default exactness degree for interpolating and projecting smooth data.
pub const INTERP_DEGREE: usize = 16;

/// Basis values and physical gradients at one point of one element.
#[derive(Clone, Debug, Default)]
pub struct BasisEval {
    pub values: Vec<Vec3>,
    pub grads: Vec<Mat3>,
}

impl BasisEval {
    pub fn with_len(n: usize) -> Self {
        BasisEval {
            values: vec![Vec3::zeros(); n],
            grads: vec![Mat3::zeros(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value and gradient of `sum_i c_i phi_i`.
    pub fn combine(&self, coeffs: impl Iterator<Item = f64>) -> (Vec3, Mat3) {
        let mut v = Vec3::zeros();
        let mut g = Mat3::zeros();
        for (i, c) in coeffs.enumerate() {
            v += c * self.values[i];
            g += c * self.grads[i];
        }
        (v, g)
    }
}

/// Exponents of the monomials of total degree at most `k` in 3 variables,
/// ordered by degree then lexicographically.
pub(crate) fn monomial_exponents_3d(k: usize) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for d in 0..=k as i32 {
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                out.push([a, b, d - a - b]);
            }
        }
    }
    out
}

pub(crate) fn monomial_exponents_2d(k: usize) -> Vec<[i32; 2]> {
    let mut out = Vec::new();
    for d in 0..=k as i32 {
        for a in (0..=d).rev() {
            out.push([a, d - a]);
        }
    }
    out
}

fn ipow(x: f64, e: i32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e),
    }
}

/// Values and reference gradients of 3D monomials.
pub(crate) fn eval_monomials_3d(exps: &[[i32; 3]], x: &Vec3, val: &mut [f64], grad: &mut [Vec3]) {
    for (i, e) in exps.iter().enumerate() {
        let px = ipow(x.x, e[0]);
        let py = ipow(x.y, e[1]);
        let pz = ipow(x.z, e[2]);
        val[i] = px * py * pz;
        let dx = if e[0] > 0 { e[0] as f64 * ipow(x.x, e[0] - 1) * py * pz } else { 0.0 };
        let dy = if e[1] > 0 { e[1] as f64 * px * ipow(x.y, e[1] - 1) * pz } else { 0.0 };
        let dz = if e[2] > 0 { e[2] as f64 * px * py * ipow(x.z, e[2] - 1) } else { 0.0 };
        grad[i] = Vec3::new(dx, dy, dz);
    }
}

pub(crate) fn eval_monomials_2d(exps: &[[i32; 2]], s: f64, t: f64) -> Vec<f64> {
    exps.iter().map(|e| ipow(s, e[0]) * ipow(t, e[1])).collect()
}

/// Lower-triangular `L^{-1}` such that `L^{-1} m` is orthonormal for the
/// Gram matrix `gram` of the monomials `m`.
pub(crate) fn orthonormalizer(gram: DMatrix<f64>) -> DMatrix<f64> {
    let chol = gram.cholesky().expect("monomial Gram matrix is SPD");
    let l = chol.l();
    l.solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
        .expect("non-singular Cholesky factor")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_counts() {
        assert_eq!(monomial_exponents_3d(0).len(), 1);
        assert_eq!(monomial_exponents_3d(1).len(), 4);
        assert_eq!(monomial_exponents_3d(2).len(), 10);
        assert_eq!(monomial_exponents_2d(2).len(), 6);
    }
}
