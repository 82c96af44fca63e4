use std::sync::Arc;

use mhd_core::analysis::{
    compute_errors, pressure_error_sq, regime_diagnostics, velocity_parts, magnetic_parts, NormDegrees,
};
use mhd_core::experiment::{advection_fields, solve_case, MeshSource, RunConfig};
use mhd_core::fespace::BasisEval;
use mhd_core::forms::{matrix_degree, AdvectionFields, Scheme, StabParams};
use mhd_core::mms::{self, ExactFields, Manufactured};
use mhd_core::quadrature::{map_to_face, tri_rule};
use mhd_core::{Execution, Mat3, PhysicalParams, Solution, Spaces, TetMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Global affine fields, contained in every discrete space.
struct Affine;

impl ExactFields for Affine {
    fn u(&self, x: &Vec3) -> Vec3 {
        Vec3::new(1.0 + 2.0 * x.y, -x.z + 0.5, 3.0 * x.x - x.z)
    }
    fn grad_u(&self, _: &Vec3) -> Mat3 {
        Mat3::new(0.0, 2.0, 0.0, 0.0, 0.0, -1.0, 3.0, 0.0, -1.0)
    }
    fn p(&self, _: &Vec3) -> f64 {
        0.0
    }
    fn b(&self, x: &Vec3) -> Vec3 {
        Vec3::new(x.x - x.y, 2.0 * x.z, 1.0 + x.y)
    }
    fn grad_b(&self, _: &Vec3) -> Mat3 {
        Mat3::new(1.0, -1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 1.0, 0.0)
    }
}

fn spaces(n: usize, k: usize) -> Spaces {
    Spaces::new(Arc::new(TetMesh::structured_cube(n).unwrap()), k).unwrap()
}

fn theta_b() -> AdvectionFields {
    AdvectionFields {
        chi: mhd_core::AdvectionField::analytic(mms::velocity),
        theta: mhd_core::AdvectionField::analytic(mms::magnetic),
    }
}

#[test]
fn discrete_fields_fed_back_have_zero_error() {
    for k in 1..=2 {
        let s = spaces(2, k);
        let ex = Affine;
        let sol = Solution {
            u: s.vel.interpolate(&|x| ex.u(x), 8).unwrap(),
            p: vec![0.0; s.pres.num_dofs()],
            b: s.mag.interpolate(&|x| ex.b(x)),
            lambda: 0.0,
            residual: 0.0,
            nnz: 0,
        };
        let e = compute_errors(
            &s,
            &sol,
            &ex,
            &PhysicalParams::with_nu(1.0),
            &StabParams::defaults(k),
            &theta_b(),
            Execution::Serial,
        )
        .unwrap();
        for (name, v) in e.named() {
            assert!(v <= 1e-12, "k={k} {name} = {v}");
        }
    }
}

#[test]
fn continuous_discrete_field_has_no_jump_seminorms() {
    let s = spaces(2, 1);
    let c = s.vel.interpolate(&|x| Affine.u(x), 8).unwrap();
    let v = velocity_parts(&s.vel, &c, None, &theta_b(), &StabParams::defaults(1), NormDegrees::forms(1), Execution::Serial)
        .unwrap();
    assert!(v.upw.abs() < 1e-24 && v.cip.abs() < 1e-24);
    assert!(v.mass > 0.1);
}

#[test]
fn norms_are_homogeneous() {
    let s = spaces(2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let c: Vec<f64> = (0..s.vel.num_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let stab = StabParams::defaults(2);
    let f = theta_b();
    let base = velocity_parts(&s.vel, &c, None, &f, &stab, NormDegrees::forms(2), Execution::Serial).unwrap();
    for t in [2.0, -1.0] {
        let ct: Vec<f64> = c.iter().map(|v| t * v).collect();
        let p = velocity_parts(&s.vel, &ct, None, &f, &stab, NormDegrees::forms(2), Execution::Serial).unwrap();
        for (a, b) in [
            (p.mass, base.mass),
            (p.grad, base.grad),
            (p.jump, base.jump),
            (p.upw, base.upw),
            (p.cip, base.cip),
        ] {
            assert!((a - t * t * b).abs() <= 1e-12 * a.abs());
        }
    }
}

#[test]
fn stab_error_decomposes_on_a_solved_run() {
    let cfg = RunConfig::parse("degree = 1\nmesh.structured_n = 2\nnu_s = 1e-3\nnu_m = 1e-3").unwrap();
    let out = solve_case(&cfg, &MeshSource::Structured(2), cfg.params, Scheme::MfStab).unwrap();
    let e = out.record.errors;
    let sum = e.u_s.powi(2) + e.u_upw.powi(2) + e.u_cip.powi(2);
    assert!((e.u_stab.powi(2) - sum).abs() <= 1e-12 * sum);

    // recompute the pieces from the parts functions
    let s = spaces(2, 1);
    let fields = advection_fields(&cfg, &s).unwrap();
    let ex = Manufactured::new(cfg.params);
    let u = |x: &Vec3| ex.u(x);
    let gu = |x: &Vec3| ex.grad_u(x);
    let v = velocity_parts(&s.vel, &out.solution.u, Some((&u, &gu)), &fields, &cfg.stab, NormDegrees::errors(1), Execution::Serial)
        .unwrap();
    let p = &cfg.params;
    let s_sq = p.sigma_s * v.mass + p.nu_s * v.eps + p.nu_s * cfg.stab.mu_a * v.jump;
    assert!((e.u_s - s_sq.sqrt()).abs() <= 1e-12 * e.u_s);
    assert!((e.u_upw - v.upw.sqrt()).abs() <= 1e-12 * e.u_upw);
    let b = |x: &Vec3| ex.b(x);
    let gb = |x: &Vec3| ex.grad_b(x);
    let m = magnetic_parts(&s.mag, &out.solution.b, Some((&b, &gb)), matrix_degree(1) + 6, Execution::Serial).unwrap();
    assert!((e.b_m - (p.sigma_m * m.mass + p.nu_m * m.grad).sqrt()).abs() <= 1e-12 * e.b_m);
    let pe = pressure_error_sq(&s.pres, &out.solution.p, &|x| ex.p(x), matrix_degree(1) + 6, Execution::Serial).unwrap();
    assert!((e.p_l2 - pe.sqrt()).abs() <= 1e-12 * e.p_l2);
}

#[test]
fn parallel_errors_match_serial() {
    let cfg = RunConfig::parse("degree = 2\nmesh.structured_n = 2\nnu_s = 1e-3\nnu_m = 1e-3").unwrap();
    let out = solve_case(&cfg, &MeshSource::Structured(2), cfg.params, Scheme::MfStab).unwrap();
    let s = spaces(2, 2);
    let fields = advection_fields(&cfg, &s).unwrap();
    let ex = Manufactured::new(cfg.params);
    let a = compute_errors(&s, &out.solution, &ex, &cfg.params, &cfg.stab, &fields, Execution::Serial).unwrap();
    let b = compute_errors(&s, &out.solution, &ex, &cfg.params, &cfg.stab, &fields, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn regime_terms_match_face_maxima() {
    let s = spaces(8, 1);
    let cfg = RunConfig::parse("degree = 1\nmesh.structured_n = 8\nnu_s = 1e-10\nnu_m = 1e-10").unwrap();
    let fields = advection_fields(&cfg, &s).unwrap();
    let d = regime_diagnostics(&s.vel, &cfg.params, &cfg.stab, &fields).unwrap();
    let h = s.mesh.metrics().unwrap().h_max;
    let rule = tri_rule(matrix_degree(1)).unwrap();
    let mut ev = BasisEval::default();
    let (mut chi, mut th): (f64, f64) = (0.0, 0.0);
    for (f, rec) in s.mesh.interior_faces() {
        for (x, _) in map_to_face(&rule, &s.mesh.face_vertices(f)) {
            let (c, _) = match &fields.chi {
                mhd_core::AdvectionField::Bdm(coeffs) => s.vel.field_at(coeffs, rec.owner, &x, &mut ev),
                _ => unreachable!(),
            };
            chi = chi.max(c.dot(&rec.normal).abs());
            th = th.max(mms::magnetic(&x).norm_squared());
        }
    }
    let expect = [h * h, chi * h, th * h, 1e-10 * (1.0 + 10.0 + 0.1)];
    for (a, b) in d.lambda_s_terms.iter().zip(expect) {
        assert!((a - b).abs() <= 1e-14 * b.max(1e-300), "{a} vs {b}");
    }
    let top = expect.iter().copied().fold(0.0, f64::max);
    assert_eq!(d.lambda_s * d.lambda_s, top);
    // both advection entries dominate the viscous one by many orders
    assert!(d.lambda_s_terms[1] > 1e6 * d.lambda_s_terms[3]);
    assert!(d.lambda_s_terms[1] > d.lambda_s_terms[0]);
    println!("Lambda_S^2 terms: {:?}", d.lambda_s_terms);
}

#[test]
fn korn_ratio_is_finite() {
    let s = spaces(2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let stab = StabParams::defaults(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let c: Vec<f64> = (0..s.vel.num_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = velocity_parts(&s.vel, &c, None, &AdvectionFields::zero(), &stab, NormDegrees::forms(1), Execution::Serial)
            .unwrap();
        worst = worst.max(v.grad / (v.mass + v.eps + stab.mu_a * v.jump));
    }
    println!("discrete Korn ratio {worst:.3}");
    assert!(worst.is_finite() && worst > 0.0);
}
