//! The manufactured forcing tested in weak form against random bump fields
//! vanishing with their gradients on the cube boundary.

use mhd_core::mms::{self, curl_of, Manufactured};
use mhd_core::quadrature::tet_rule;
use mhd_core::{Mat3, PhysicalParams, TetMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Bump {
    a: Mat3,
    c: Vec3,
}

impl Bump {
    fn phi(x: &Vec3) -> (f64, Vec3) {
        let q = |s: f64| s * (1.0 - s);
        let dq = |s: f64| 1.0 - 2.0 * s;
        let (qx, qy, qz) = (q(x.x), q(x.y), q(x.z));
        let b = qx * qy * qz;
        let g = Vec3::new(dq(x.x) * qy * qz, qx * dq(x.y) * qz, qx * qy * dq(x.z));
        (b * b, 2.0 * b * g)
    }

    fn eval(&self, x: &Vec3) -> (Vec3, Mat3) {
        let (p, gp) = Self::phi(x);
        let poly = self.c + self.a * x;
        (p * poly, poly * gp.transpose() + p * self.a)
    }
}

fn residuals(m: &Manufactured, w: &Bump) -> (f64, f64, f64) {
    let mesh = TetMesh::structured_cube(3).unwrap();
    let rule = tet_rule(16).unwrap();
    let p = &m.params;
    let (mut rs, mut rm, mut scale) = (0.0, 0.0, 0.0);
    for t in 0..mesh.num_tets() {
        let g = mesh.geometry(t);
        for (xr, wq) in rule.iter() {
            let x = g.to_physical(&Vec3::from(*xr));
            let wd = wq * g.det.abs();
            let (v, gv) = w.eval(&x);
            let gu = mms::velocity_gradient(&x);
            let eu = 0.5 * (gu + gu.transpose());
            let ev = 0.5 * (gv + gv.transpose());
            let momentum = p.sigma_s * mms::velocity(&x).dot(&v)
                + p.nu_s * eu.dot(&ev)
                + (gu * m.chi(&x)).dot(&v)
                - mms::curl_magnetic(&x).cross(&m.theta(&x)).dot(&v)
                + mms::pressure(&x) * gv.trace()
                - m.momentum_forcing(&x).dot(&v);
            let b = mms::magnetic(&x);
            let curl_w = curl_of(&gv);
            let u_x_theta = mms::velocity(&x).cross(&m.theta(&x));
            // -(curl(u x Theta), w) = -(u x Theta, curl w) for w vanishing on the boundary
            let induction = p.sigma_m * b.dot(&v) + p.nu_m * mms::curl_magnetic(&x).dot(&curl_w)
                - u_x_theta.dot(&curl_w)
                - m.induction_forcing(&x).dot(&v);
            rs += wd * momentum;
            rm += wd * induction;
            scale += wd * (m.momentum_forcing(&x).norm() + m.induction_forcing(&x).norm()) * v.norm();
        }
    }
    (rs, rm, scale)
}

#[test]
fn forcing_satisfies_weak_residual_for_random_bumps() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for params in [
        PhysicalParams {
            sigma_s: 1.0,
            sigma_m: 1.0,
            nu_s: 1e-5,
            nu_m: 1e-5,
        },
        PhysicalParams {
            sigma_s: 0.3,
            sigma_m: 2.0,
            nu_s: 1.7,
            nu_m: 0.4,
        },
    ] {
        let m = Manufactured::new(params);
        for _ in 0..20 {
            let w = Bump {
                a: Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
                c: Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
            };
            let (rs, rm, scale) = residuals(&m, &w);
            assert!(rs.abs() <= 1e-8 * scale, "momentum residual {rs} (scale {scale})");
            assert!(rm.abs() <= 1e-8 * scale, "induction residual {rm} (scale {scale})");
        }
    }
}

#[test]
fn pressure_term_is_exercised() {
    // the pressure pairing is far from zero for these test fields, so a sign
    // error in the forcing could not hide in the residual check
    let w = Bump {
        a: Mat3::identity(),
        c: Vec3::new(0.3, -0.2, 0.5),
    };
    let mesh = TetMesh::structured_cube(3).unwrap();
    let rule = tet_rule(16).unwrap();
    let mut r = 0.0;
    for t in 0..mesh.num_tets() {
        let g = mesh.geometry(t);
        for (xr, wq) in rule.iter() {
            let x = g.to_physical(&Vec3::from(*xr));
            r += wq * g.det.abs() * mms::pressure(&x) * w.eval(&x).1.trace();
        }
    }
    assert!(r.abs() > 1e-5, "{r}");
}
