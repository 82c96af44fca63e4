//! Manufactured solution on the unit cube, forcing terms and boundary data.
//!
//! ```text
//! u = ( sin(pi x) cos(pi y) cos(pi z),
//!       sin(pi y) cos(pi z) cos(pi x),
//!      -2 sin(pi z) cos(pi x) cos(pi y) )
//! p = sin x + sin y - 2 sin z
//! B = ( sin(pi y), sin(pi z), sin(pi x) )
//! ```
//!
//! `u` and `B` are solenoidal, `u . n = 0` on the boundary of the cube and
//! `p` has zero mean. Every derivative is written out by hand.

use std::f64::consts::PI;

use crate::forms::PhysicalParams;
use crate::{Mat3, Vec3};

/// Smooth exact fields an error is measured against.
pub trait ExactFields: Sync {
    fn u(&self, x: &Vec3) -> Vec3;
    fn grad_u(&self, x: &Vec3) -> Mat3;
    fn p(&self, x: &Vec3) -> f64;
    fn b(&self, x: &Vec3) -> Vec3;
    fn grad_b(&self, x: &Vec3) -> Mat3;
}

/// Which advection fields the forcing is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binding {
    /// `chi = u` (resp. `Theta = B`).
    Exact,
    Zero,
}

#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub params: PhysicalParams,
    pub chi: Binding,
    pub theta: Binding,
    /// Adds `grad phi` with `phi = cos(pi x) cos(pi y) cos(pi z)` to the
    /// momentum forcing; the exact pressure becomes `p - phi`.
    pub gradient_perturbation: bool,
}

struct Trig {
    sx: f64,
    sy: f64,
    sz: f64,
    cx: f64,
    cy: f64,
    cz: f64,
}

impl Trig {
    fn at(x: &Vec3) -> Self {
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let (sz, cz) = (PI * x.z).sin_cos();
        Trig { sx, sy, sz, cx, cy, cz }
    }
}

pub fn velocity(x: &Vec3) -> Vec3 {
    let t = Trig::at(x);
    Vec3::new(t.sx * t.cy * t.cz, t.sy * t.cz * t.cx, -2.0 * t.sz * t.cx * t.cy)
}

pub fn velocity_gradient(x: &Vec3) -> Mat3 {
    let t = Trig::at(x);
    Mat3::new(
        PI * t.cx * t.cy * t.cz,
        -PI * t.sx * t.sy * t.cz,
        -PI * t.sx * t.cy * t.sz,
        -PI * t.sx * t.sy * t.cz,
        PI * t.cx * t.cy * t.cz,
        -PI * t.cx * t.sy * t.sz,
        2.0 * PI * t.sx * t.cy * t.sz,
        2.0 * PI * t.cx * t.sy * t.sz,
        -2.0 * PI * t.cx * t.cy * t.cz,
    )
}

/// `div eps(u) = (Laplace u + grad div u) / 2 = -(3 pi^2 / 2) u`.
pub fn div_sym_grad_velocity(x: &Vec3) -> Vec3 {
    -1.5 * PI * PI * velocity(x)
}

pub fn pressure(x: &Vec3) -> f64 {
    x.x.sin() + x.y.sin() - 2.0 * x.z.sin()
}

pub fn pressure_gradient(x: &Vec3) -> Vec3 {
    Vec3::new(x.x.cos(), x.y.cos(), -2.0 * x.z.cos())
}

pub fn magnetic(x: &Vec3) -> Vec3 {
    Vec3::new((PI * x.y).sin(), (PI * x.z).sin(), (PI * x.x).sin())
}

pub fn magnetic_gradient(x: &Vec3) -> Mat3 {
    let t = Trig::at(x);
    Mat3::new(0.0, PI * t.cy, 0.0, 0.0, 0.0, PI * t.cz, PI * t.cx, 0.0, 0.0)
}

pub fn curl_magnetic(x: &Vec3) -> Vec3 {
    let t = Trig::at(x);
    -PI * Vec3::new(t.cz, t.cx, t.cy)
}

/// `curl curl B = pi^2 B`.
pub fn curl_curl_magnetic(x: &Vec3) -> Vec3 {
    PI * PI * magnetic(x)
}

pub fn perturbation(x: &Vec3) -> f64 {
    let t = Trig::at(x);
    t.cx * t.cy * t.cz
}

pub fn perturbation_gradient(x: &Vec3) -> Vec3 {
    let t = Trig::at(x);
    -PI * Vec3::new(t.sx * t.cy * t.cz, t.cx * t.sy * t.cz, t.cx * t.cy * t.sz)
}

/// Curl of a matrix-valued gradient field: `curl v` from `grad v`.
pub fn curl_of(grad: &Mat3) -> Vec3 {
    Vec3::new(
        grad[(2, 1)] - grad[(1, 2)],
        grad[(0, 2)] - grad[(2, 0)],
        grad[(1, 0)] - grad[(0, 1)],
    )
}

impl Manufactured {
    pub fn new(params: PhysicalParams) -> Self {
        Manufactured {
            params,
            chi: Binding::Exact,
            theta: Binding::Exact,
            gradient_perturbation: false,
        }
    }

    pub fn chi(&self, x: &Vec3) -> Vec3 {
        match self.chi {
            Binding::Exact => velocity(x),
            Binding::Zero => Vec3::zeros(),
        }
    }

    pub fn theta(&self, x: &Vec3) -> Vec3 {
        match self.theta {
            Binding::Exact => magnetic(x),
            Binding::Zero => Vec3::zeros(),
        }
    }

    fn theta_gradient(&self, x: &Vec3) -> Mat3 {
        match self.theta {
            Binding::Exact => magnetic_gradient(x),
            Binding::Zero => Mat3::zeros(),
        }
    }

    /// `f = sigma_S u - nu_S div eps(u) + (grad u) chi + Theta x curl B - grad p`.
    pub fn momentum_forcing(&self, x: &Vec3) -> Vec3 {
        let p = &self.params;
        let mut f = p.sigma_s * velocity(x) - p.nu_s * div_sym_grad_velocity(x)
            + velocity_gradient(x) * self.chi(x)
            + self.theta(x).cross(&curl_magnetic(x))
            - pressure_gradient(x);
        if self.gradient_perturbation {
            f += perturbation_gradient(x);
        }
        f
    }

    /// `G = sigma_M B + nu_M curl curl B - curl(u x Theta)`, with
    /// `curl(u x Theta) = u div Theta - Theta div u + (grad u) Theta - (grad Theta) u`.
    pub fn induction_forcing(&self, x: &Vec3) -> Vec3 {
        let p = &self.params;
        let u = velocity(x);
        let gu = velocity_gradient(x);
        let th = self.theta(x);
        let gth = self.theta_gradient(x);
        let curl_u_theta = u * gth.trace() - th * gu.trace() + gu * th - gth * u;
        p.sigma_m * magnetic(x) + p.nu_m * curl_curl_magnetic(x) - curl_u_theta
    }

    /// Boundary trace of the exact velocity.
    pub fn velocity_trace(&self, x: &Vec3) -> Vec3 {
        velocity(x)
    }

    /// Natural flux for the induction equation on a boundary face with
    /// outward normal `n`: `nu_M (curl B x n) + n x (u x Theta)`.
    pub fn induction_flux(&self, x: &Vec3, n: &Vec3) -> Vec3 {
        self.params.nu_m * curl_magnetic(x).cross(n) + n.cross(&velocity(x).cross(&self.theta(x)))
    }
}

impl ExactFields for Manufactured {
    fn u(&self, x: &Vec3) -> Vec3 {
        velocity(x)
    }

    fn grad_u(&self, x: &Vec3) -> Mat3 {
        velocity_gradient(x)
    }

    fn p(&self, x: &Vec3) -> f64 {
        if self.gradient_perturbation {
            pressure(x) - perturbation(x)
        } else {
            pressure(x)
        }
    }

    fn b(&self, x: &Vec3) -> Vec3 {
        magnetic(x)
    }

    fn grad_b(&self, x: &Vec3) -> Mat3 {
        magnetic_gradient(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> PhysicalParams {
        PhysicalParams {
            sigma_s: 1.0,
            sigma_m: 1.0,
            nu_s: 0.3,
            nu_m: 0.7,
        }
    }

    fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    fn fd_gradient(f: impl Fn(&Vec3) -> Vec3, x: &Vec3, h: f64) -> Mat3 {
        let mut g = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let d = (f(&(x + e)) - f(&(x - e))) / (2.0 * h);
            g.set_column(j, &d);
        }
        g
    }

    #[test]
    fn point_values() {
        let u = velocity(&Vec3::new(0.5, 0.0, 0.0));
        assert!((u - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(magnetic(&Vec3::zeros()), Vec3::zeros());
    }

    #[test]
    fn solenoidal_fields() {
        for x in random_points(1000, 1) {
            assert!(velocity_gradient(&x).trace().abs() < 1e-12);
            assert!(magnetic_gradient(&x).trace().abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for x in random_points(100, 2) {
            assert!((fd_gradient(velocity, &x, h) - velocity_gradient(&x)).amax() < 1e-8);
            assert!((fd_gradient(magnetic, &x, h) - magnetic_gradient(&x)).amax() < 1e-8);
            let gp = fd_gradient(|y| Vec3::repeat(pressure(y)), &x, h);
            assert!((gp.row(0).transpose() - pressure_gradient(&x)).amax() < 1e-8);
            let gphi = fd_gradient(|y| Vec3::repeat(perturbation(y)), &x, h);
            assert!((gphi.row(0).transpose() - perturbation_gradient(&x)).amax() < 1e-8);
            assert!((curl_of(&magnetic_gradient(&x)) - curl_magnetic(&x)).amax() < 1e-12);
            // second derivatives through differences of the exact gradients
            let h2 = 1e-4;
            let ccb = curl_of(&fd_gradient(curl_magnetic, &x, h2));
            assert!((ccb - curl_curl_magnetic(&x)).amax() < 1e-6);
            let mut lap = Vec3::zeros();
            for j in 0..3 {
                let mut e = Vec3::zeros();
                e[j] = h2;
                lap += (velocity_gradient(&(x + e)).column(j) - velocity_gradient(&(x - e)).column(j)) / (2.0 * h2);
            }
            assert!((0.5 * lap - div_sym_grad_velocity(&x)).amax() < 1e-6);
        }
    }

    #[test]
    fn boundary_normal_velocity_vanishes() {
        let pts = random_points(200, 3);
        for x in pts {
            for axis in 0..3 {
                for side in [0.0, 1.0] {
                    let mut y = x;
                    y[axis] = side;
                    assert!(velocity(&y)[axis].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn curl_of_u_cross_theta_identity() {
        // Oracle: central differences of u x B.
        let m = Manufactured::new(params());
        let h = 1e-5;
        for x in random_points(50, 4) {
            let w = |y: &Vec3| velocity(y).cross(&magnetic(y));
            let curl_fd = curl_of(&fd_gradient(w, &x, h));
            let g_no_curl = m.params.sigma_m * magnetic(&x) + m.params.nu_m * curl_curl_magnetic(&x);
            assert!((g_no_curl - m.induction_forcing(&x) - curl_fd).amax() < 1e-8);
        }
    }

    #[test]
    fn reduced_forcing_cases() {
        let x = Vec3::new(0.3, 0.7, 0.2);
        let mut m = Manufactured::new(PhysicalParams {
            sigma_s: 1.0,
            sigma_m: 1.0,
            nu_s: 0.0,
            nu_m: 0.0,
        });
        m.chi = Binding::Zero;
        m.theta = Binding::Zero;
        assert!((m.momentum_forcing(&x) + pressure_gradient(&x) - velocity(&x)).norm() < 1e-14);
        assert!((m.induction_forcing(&x) - magnetic(&x)).norm() < 1e-14);
    }

    #[test]
    fn boundary_data() {
        let m = Manufactured::new(params());
        assert_eq!(magnetic(&Vec3::zeros()), Vec3::zeros());
        let x = Vec3::new(0.0, 0.5, 0.5);
        assert!((m.velocity_trace(&x) - velocity(&x)).norm() == 0.0);
        let y = Vec3::new(1.0, 0.3, 0.6);
        let j = curl_magnetic(&y);
        let expect = -PI * Vec3::new((PI * 0.6).cos(), (PI * 1.0).cos(), (PI * 0.3).cos());
        assert!((j - expect).norm() < 1e-14);
    }
}
