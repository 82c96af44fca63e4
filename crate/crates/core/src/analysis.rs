//! Error norms, regime quantities and convergence rates.
//!
//! The velocity error `e = u - u_h` is measured in
//!
//! ```text
//! ||e||_S^2    = sigma_S ||e||^2 + nu_S ||eps_h(e)||^2 + nu_S mu_a sum_f h_f^-1 ||[[e]]||_f^2
//! |e|_upw^2    = mu_c sum_{f int} || |chi . n_f|^1/2 [[e]] ||_f^2
//! |e|_cip^2    = mu_J1 sum_{f int} ||Theta x [[e]]||_f^2 + mu_J2 sum_{f int} h_f^2 ||[[grad_h e]] Theta||_f^2
//! |||e|||^2    = ||e||_S^2 + |e|_upw^2 + |e|_cip^2
//! ||e||_{1,h}^2 = ||e||^2 + ||eps_h(e)||^2 + mu_a sum_f h_f^-1 ||[[e]]||_f^2
//! ```
//!
//! and the magnetic error in `|||E|||_M^2 = sigma_M ||E||^2 + nu_M ||grad E||^2`.
//! The exact fields are continuous, so interior jumps of the error are the
//! negated jumps of the discrete field; on boundary faces the jump is the
//! trace `u - u_h`.

use crate::error::{Error, Result};
use crate::fespace::{BasisEval, BdmSpace, LagrangeSpace, PressureSpace};
use crate::forms::{collect_ordered, matrix_degree, AdvectionFields, FormVariant, PhysicalParams, StabParams};
use crate::mms::{curl_of, ExactFields};
use crate::quadrature::{map_to_face, tet_rule, tri_rule};
use crate::system::{Solution, Spaces};
use crate::{Execution, Mat3, Vec3};

/// Extra exactness used when integrating errors against smooth fields.
pub const ERROR_DEGREE_EXTRA: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorReport {
    pub u_l2: f64,
    pub u_h1: f64,
    pub u_s: f64,
    pub u_upw: f64,
    pub u_cip: f64,
    pub u_stab: f64,
    pub u_1h: f64,
    pub p_l2: f64,
    pub b_l2: f64,
    pub b_h1: f64,
    pub b_m: f64,
}

impl ErrorReport {
    /// Every entry with its CSV column name.
    pub fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("err_u_L2", self.u_l2),
            ("err_u_H1", self.u_h1),
            ("err_u_S", self.u_s),
            ("err_u_upw", self.u_upw),
            ("err_u_cip", self.u_cip),
            ("err_u_stab", self.u_stab),
            ("err_u_1h", self.u_1h),
            ("err_p_L2", self.p_l2),
            ("err_B_L2", self.b_l2),
            ("err_B_H1", self.b_h1),
            ("err_B_M", self.b_m),
        ]
    }
}

/// Squared velocity quantities of one field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VelocityParts {
    pub mass: f64,
    pub grad: f64,
    pub eps: f64,
    /// `sum_f h_f^-1 ||[[e]]||_f^2` over all faces.
    pub jump: f64,
    /// `|e|_upw^2`, including `mu_c`.
    pub upw: f64,
    /// `|e|_cip^2`, including `mu_J1` and `mu_J2`.
    pub cip: f64,
}

/// Squared magnetic quantities of one field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MagneticParts {
    pub mass: f64,
    pub grad: f64,
    pub curl: f64,
    pub div: f64,
}

/// A smooth velocity reference: value and gradient.
pub type VelocityRef<'a> = (
    &'a (dyn Fn(&Vec3) -> Vec3 + Sync),
    &'a (dyn Fn(&Vec3) -> Mat3 + Sync),
);

/// Quadrature degrees for norm evaluation.
#[derive(Clone, Copy, Debug)]
pub struct NormDegrees {
    pub volume: usize,
    pub face: usize,
}

impl NormDegrees {
    /// Degrees of the assembled forms, so norms of discrete fields match
    /// the quadratic forms exactly.
    pub fn forms(k: usize) -> Self {
        NormDegrees {
            volume: matrix_degree(k),
            face: matrix_degree(k),
        }
    }

    pub fn errors(k: usize) -> Self {
        NormDegrees {
            volume: matrix_degree(k) + ERROR_DEGREE_EXTRA,
            face: matrix_degree(k) + ERROR_DEGREE_EXTRA,
        }
    }
}

/// Squared norms of `u_ref - u_h`; with `u_ref = None` of `u_h` itself.
pub fn velocity_parts(
    vel: &BdmSpace,
    coeffs: &[f64],
    u_ref: Option<VelocityRef<'_>>,
    fields: &AdvectionFields,
    stab: &StabParams,
    deg: NormDegrees,
    exec: Execution,
) -> Result<VelocityParts> {
    let mesh = vel.mesh();
    let trule = tet_rule(deg.volume)?;
    let frule = tri_rule(deg.face)?;
    let vol = collect_ordered(mesh.num_tets(), exec, |t, out: &mut Vec<[f64; 3]>| {
        let g = vel.geometry(t);
        let dofs = vel.local_dofs(t);
        let mut ev = BasisEval::default();
        let mut acc = [0.0; 3];
        for (p, w) in trule.iter() {
            let xr = Vec3::from(*p);
            vel.eval(t, &xr, &mut ev);
            let (mut v, mut gv) = ev.combine(dofs.iter().map(|&d| coeffs[d]));
            if let Some((u, gu)) = u_ref {
                let x = g.to_physical(&xr);
                v = u(&x) - v;
                gv = gu(&x) - gv;
            }
            let wd = w * g.det.abs();
            acc[0] += wd * v.norm_squared();
            acc[1] += wd * gv.norm_squared();
            acc[2] += wd * (0.5 * (gv + gv.transpose())).norm_squared();
        }
        out.push(acc);
    });
    let faces = collect_ordered(mesh.num_faces(), exec, |f, out: &mut Vec<[f64; 3]>| {
        let rec = &mesh.faces[f];
        let mut ev = BasisEval::default();
        let pts = map_to_face(&frule, &mesh.face_vertices(f));
        let mut jumps = Vec::with_capacity(pts.len());
        for (x, w) in &pts {
            let (vo, go) = vel.field_at(coeffs, rec.owner, x, &mut ev);
            let (j, gj) = match rec.neighbor {
                Some(nb) => {
                    let (vn, gn) = vel.field_at(coeffs, nb, x, &mut ev);
                    (vn - vo, gn - go)
                }
                None => match u_ref {
                    Some((u, _)) => (u(x) - vo, Mat3::zeros()),
                    None => (-vo, Mat3::zeros()),
                },
            };
            jumps.push((*x, *w, j, gj));
        }
        let jump: f64 = jumps.iter().map(|(_, w, j, _)| w * j.norm_squared()).sum::<f64>() / rec.h_f;
        if rec.is_boundary() {
            out.push([jump, 0.0, 0.0]);
            return;
        }
        let chi_n: Vec<f64> = jumps
            .iter()
            .map(|(x, ..)| fields.chi.eval(vel, rec.owner, x, &mut ev).dot(&rec.normal).abs())
            .collect();
        let theta: Vec<Vec3> = jumps
            .iter()
            .map(|(x, ..)| fields.theta.eval(vel, rec.owner, x, &mut ev))
            .collect();
        let chi_max = chi_n.iter().fold(0.0_f64, |a, b| a.max(*b));
        let th_max2 = theta.iter().fold(0.0_f64, |a, t| a.max(t.norm_squared()));
        let h2 = rec.h_f * rec.h_f;
        let mut upw = 0.0;
        let mut cip = 0.0;
        for (q, (_, w, j, gj)) in jumps.iter().enumerate() {
            match stab.variant {
                FormVariant::Full => {
                    upw += w * chi_n[q] * j.norm_squared();
                    cip += w
                        * (stab.mu_j1 * theta[q].cross(j).norm_squared()
                            + stab.mu_j2 * h2 * (gj * theta[q]).norm_squared());
                }
                FormVariant::Simplified => {
                    upw += w * chi_max * j.norm_squared();
                    cip += w * th_max2 * (stab.mu_j1 * j.norm_squared() + stab.mu_j2 * h2 * gj.norm_squared());
                }
            }
        }
        out.push([jump, stab.mu_c * upw, cip]);
    });
    let v = vol.iter().fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let f = faces.iter().fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    Ok(VelocityParts {
        mass: v[0],
        grad: v[1],
        eps: v[2],
        jump: f[0],
        upw: f[1],
        cip: f[2],
    })
}

/// Squared norms of `b_ref - B_h`, or of `B_h` with `b_ref = None`.
pub fn magnetic_parts(
    mag: &LagrangeSpace,
    coeffs: &[f64],
    b_ref: Option<(&(dyn Fn(&Vec3) -> Vec3 + Sync), &(dyn Fn(&Vec3) -> Mat3 + Sync))>,
    degree: usize,
    exec: Execution,
) -> Result<MagneticParts> {
    let rule = tet_rule(degree)?;
    let parts = collect_ordered(mag.mesh().num_tets(), exec, |t, out: &mut Vec<[f64; 4]>| {
        let g = mag.geometry(t);
        let mut acc = [0.0; 4];
        for (p, w) in rule.iter() {
            let xr = Vec3::from(*p);
            let (mut v, mut gv) = mag.field_at(coeffs, t, &xr);
            if let Some((b, gb)) = b_ref {
                let x = g.to_physical(&xr);
                v = b(&x) - v;
                gv = gb(&x) - gv;
            }
            let wd = w * g.det.abs();
            acc[0] += wd * v.norm_squared();
            acc[1] += wd * gv.norm_squared();
            acc[2] += wd * curl_of(&gv).norm_squared();
            acc[3] += wd * gv.trace().powi(2);
        }
        out.push(acc);
    });
    let s = parts.iter().fold([0.0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
    Ok(MagneticParts {
        mass: s[0],
        grad: s[1],
        curl: s[2],
        div: s[3],
    })
}

/// `||p_ref - p_h||^2`.
pub fn pressure_error_sq(
    pres: &PressureSpace,
    coeffs: &[f64],
    p_ref: &(dyn Fn(&Vec3) -> f64 + Sync),
    degree: usize,
    exec: Execution,
) -> Result<f64> {
    let rule = tet_rule(degree)?;
    let parts = collect_ordered(pres.mesh().num_tets(), exec, |t, out: &mut Vec<f64>| {
        let g = pres.mesh().geometry(t);
        let mut acc = 0.0;
        for (p, w) in rule.iter() {
            let xr = Vec3::from(*p);
            let e = p_ref(&g.to_physical(&xr)) - pres.field_at(coeffs, t, &xr);
            acc += w * g.det.abs() * e * e;
        }
        out.push(acc);
    });
    Ok(parts.iter().sum())
}

pub fn report_from_parts(
    v: &VelocityParts,
    p_sq: f64,
    b: &MagneticParts,
    params: &PhysicalParams,
    stab: &StabParams,
) -> ErrorReport {
    let s_sq = params.sigma_s * v.mass + params.nu_s * v.eps + params.nu_s * stab.mu_a * v.jump;
    ErrorReport {
        u_l2: v.mass.sqrt(),
        u_h1: v.grad.sqrt(),
        u_s: s_sq.sqrt(),
        u_upw: v.upw.sqrt(),
        u_cip: v.cip.sqrt(),
        u_stab: (s_sq + v.upw + v.cip).sqrt(),
        u_1h: (v.mass + v.eps + stab.mu_a * v.jump).sqrt(),
        p_l2: p_sq.sqrt(),
        b_l2: b.mass.sqrt(),
        b_h1: b.grad.sqrt(),
        b_m: (params.sigma_m * b.mass + params.nu_m * b.grad).sqrt(),
    }
}

/// All error norms of a solution. The upwind and CIP seminorms use the
/// run's advection fields and penalty parameters regardless of the scheme.
pub fn compute_errors(
    spaces: &Spaces,
    sol: &Solution,
    exact: &dyn ExactFields,
    params: &PhysicalParams,
    stab: &StabParams,
    fields: &AdvectionFields,
    exec: Execution,
) -> Result<ErrorReport> {
    let deg = NormDegrees::errors(spaces.degree());
    let u = |x: &Vec3| exact.u(x);
    let gu = |x: &Vec3| exact.grad_u(x);
    let v = velocity_parts(&spaces.vel, &sol.u, Some((&u, &gu)), fields, stab, deg, exec)?;
    let b = |x: &Vec3| exact.b(x);
    let gb = |x: &Vec3| exact.grad_b(x);
    let m = magnetic_parts(&spaces.mag, &sol.b, Some((&b, &gb)), deg.volume, exec)?;
    let p_sq = pressure_error_sq(&spaces.pres, &sol.p, &|x| exact.p(x), deg.volume, exec)?;
    Ok(report_from_parts(&v, p_sq, &m, params, stab))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeDiagnostics {
    pub lambda_s: f64,
    pub lambda_m: f64,
    /// `sigma_S h^2`, `max |chi . n_f| h`, `max |Theta|^2 h`,
    /// `nu_S (1 + mu_a + 1 / mu_a)`.
    pub lambda_s_terms: [f64; 4],
    /// `sigma_M h^2`, `nu_M`.
    pub lambda_m_terms: [f64; 2],
}

/// Regime quantities with `h = h_max` and face maxima taken over face
/// quadrature points.
pub fn regime_diagnostics(
    vel: &BdmSpace,
    params: &PhysicalParams,
    stab: &StabParams,
    fields: &AdvectionFields,
) -> Result<RegimeDiagnostics> {
    let mesh = vel.mesh();
    let h = mesh.metrics()?.h_max;
    let rule = tri_rule(matrix_degree(vel.degree()))?;
    let mut ev = BasisEval::default();
    let mut chi_max: f64 = 0.0;
    let mut th_max: f64 = 0.0;
    if !(fields.chi.is_zero() && fields.theta.is_zero()) {
        for (f, rec) in mesh.interior_faces() {
            for (x, _) in map_to_face(&rule, &mesh.face_vertices(f)) {
                chi_max = chi_max.max(fields.chi.eval(vel, rec.owner, &x, &mut ev).dot(&rec.normal).abs());
                th_max = th_max.max(fields.theta.eval(vel, rec.owner, &x, &mut ev).norm_squared());
            }
        }
    }
    let s = [
        params.sigma_s * h * h,
        chi_max * h,
        th_max * h,
        params.nu_s * (1.0 + stab.mu_a + 1.0 / stab.mu_a),
    ];
    let m = [params.sigma_m * h * h, params.nu_m];
    Ok(RegimeDiagnostics {
        lambda_s: s.iter().fold(0.0_f64, |a, b| a.max(*b)).sqrt(),
        lambda_m: m[0].max(m[1]).sqrt(),
        lambda_s_terms: s,
        lambda_m_terms: m,
    })
}

/// `log(e1 / e2) / log(h1 / h2)` for consecutive levels.
pub fn pairwise_rates(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Least-squares slope of `log e` against `log h`.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Observed rates of several error series over a mesh sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub h: Vec<f64>,
    pub names: Vec<String>,
    /// `pairwise[i][l]`: rate of series `i` between levels `l` and `l + 1`.
    pub pairwise: Vec<Vec<f64>>,
    pub slopes: Vec<f64>,
}

impl RateTable {
    pub fn slope(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.slopes[i])
    }

    pub fn finest(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .and_then(|i| self.pairwise[i].last().copied())
    }
}

pub fn convergence_rates(h: &[f64], series: &[(String, Vec<f64>)]) -> Result<RateTable> {
    if h.len() < 2 {
        return Err(Error::DimensionMismatch("rates need at least two mesh levels".into()));
    }
    if h.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DimensionMismatch("mesh sizes must strictly decrease".into()));
    }
    for (name, e) in series {
        if e.len() != h.len() {
            return Err(Error::DimensionMismatch(format!(
                "series {name} has {} values for {} levels",
                e.len(),
                h.len()
            )));
        }
    }
    Ok(RateTable {
        h: h.to_vec(),
        names: series.iter().map(|(n, _)| n.clone()).collect(),
        pairwise: series.iter().map(|(_, e)| pairwise_rates(h, e)).collect(),
        slopes: series.iter().map(|(_, e)| least_squares_slope(h, e)).collect(),
    })
}
