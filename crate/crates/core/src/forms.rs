//! Element and face assembly of the bilinear forms and load vectors.
//!
//! Every matrix is returned unscaled (no physical coefficient in front) as a
//! triplet list with rows indexing test functions and columns trial
//! functions. Element loops run in ascending element order and face loops in
//! ascending face order; with [`Execution::Parallel`] the per-item lists are
//! concatenated in the same order, so the two modes produce identical
//! triplet lists.
//!
//! Jumps and averages use the fixed face normal `n_f` (outward for the
//! owner): `[[v]] = v_owner - v_neighbor`, `{v} = (v_owner + v_neighbor) / 2`,
//! and on boundary faces both equal the trace.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::{BasisEval, BdmSpace, LagrangeSpace, PressureSpace};
use crate::quadrature::{map_to_face, tet_rule, tri_rule, TetRule, TriRule};
use crate::sparse::Triplets;
use crate::{Execution, Mat3, Vec3};

/// Exactness degree used to integrate smooth loads and boundary data.
pub const LOAD_DEGREE: usize = 12;

/// Exactness degree for matrices of order `k`.
pub fn matrix_degree(k: usize) -> usize {
    2 * k + 2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub sigma_s: f64,
    pub sigma_m: f64,
    pub nu_s: f64,
    pub nu_m: f64,
}

impl PhysicalParams {
    /// Unit reactions and `nu_S = nu_M = nu`.
    pub fn with_nu(nu: f64) -> Self {
        PhysicalParams {
            sigma_s: 1.0,
            sigma_m: 1.0,
            nu_s: nu,
            nu_m: nu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_s", self.sigma_s),
            ("sigma_m", self.sigma_m),
            ("nu_s", self.nu_s),
            ("nu_m", self.nu_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Upwinding plus the CIP form along `Theta`.
    MfStab,
    /// Upwinding only.
    FStab,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::MfStab => "mfStab",
            Scheme::FStab => "fStab",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mfstab" => Ok(Scheme::MfStab),
            "fstab" => Ok(Scheme::FStab),
            _ => Err(Error::config("scheme", format!("expected mfStab or fStab, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormVariant {
    /// Pointwise `|chi . n_f|` and `Theta`.
    Full,
    /// Face-wise maxima of `|chi . n_f|` and `|Theta|^2`.
    Simplified,
}

impl FromStr for FormVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(FormVariant::Full),
            "simplified" => Ok(FormVariant::Simplified),
            _ => Err(Error::config("forms", format!("expected full or simplified, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabParams {
    pub mu_a: f64,
    pub mu_c: f64,
    pub mu_j1: f64,
    pub mu_j2: f64,
    pub scheme: Scheme,
    pub variant: FormVariant,
}

impl StabParams {
    /// `mu_c = 1`, `mu_J1 = 5`, `mu_J2 = 0.01`, `mu_a = 10` (k = 1) or
    /// `20` (k = 2), mfStab with the full forms.
    pub fn defaults(k: usize) -> Self {
        StabParams {
            mu_a: if k >= 2 { 20.0 } else { 10.0 },
            mu_c: 1.0,
            mu_j1: 5.0,
            mu_j2: 0.01,
            scheme: Scheme::MfStab,
            variant: FormVariant::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_a > 0.0 && self.mu_a.is_finite()) {
            return Err(Error::config("mu_a", format!("must be positive, got {}", self.mu_a)));
        }
        for (name, v) in [("mu_c", self.mu_c), ("mu_j1", self.mu_j1), ("mu_j2", self.mu_j2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

pub type VectorFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;

/// An advection field, either closed-form or a BDM coefficient vector of
/// the velocity space it is evaluated with.
#[derive(Clone)]
pub enum AdvectionField {
    Zero,
    Analytic(VectorFn),
    Bdm(Arc<Vec<f64>>),
}

impl fmt::Debug for AdvectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdvectionField::Zero => f.write_str("Zero"),
            AdvectionField::Analytic(_) => f.write_str("Analytic"),
            AdvectionField::Bdm(c) => write!(f, "Bdm({} dofs)", c.len()),
        }
    }
}

impl AdvectionField {
    pub fn analytic(g: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        AdvectionField::Analytic(Arc::new(g))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, AdvectionField::Zero)
    }

    /// Value at the physical point `x` of tet `t`.
    pub fn eval(&self, vel: &BdmSpace, t: usize, x: &Vec3, scratch: &mut BasisEval) -> Vec3 {
        match self {
            AdvectionField::Zero => Vec3::zeros(),
            AdvectionField::Analytic(g) => g(x),
            AdvectionField::Bdm(c) => vel.field_at(c, t, x, scratch).0,
        }
    }
}

/// Fluid advection `chi` and magnetic advection `Theta`.
#[derive(Clone, Debug)]
pub struct AdvectionFields {
    pub chi: AdvectionField,
    pub theta: AdvectionField,
}

impl AdvectionFields {
    pub fn zero() -> Self {
        AdvectionFields {
            chi: AdvectionField::Zero,
            theta: AdvectionField::Zero,
        }
    }
}

/// Runs `work` for every item and concatenates the emitted entries in item
/// order.
pub(crate) fn collect_ordered<T, F>(n: usize, exec: Execution, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Vec<T>) + Sync,
{
    match exec {
        Execution::Serial => {
            let mut out = Vec::new();
            for i in 0..n {
                work(i, &mut out);
            }
            out
        }
        Execution::Parallel => (0..n)
            .into_par_iter()
            .map(|i| {
                let mut v = Vec::new();
                work(i, &mut v);
                v
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect(),
    }
}

fn scatter(rows: &[usize], cols: &[usize], local: &[f64], out: &mut Vec<(usize, usize, f64)>) {
    let nc = cols.len();
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out.push((r, c, local[i * nc + j]));
        }
    }
}

fn triplets(nrows: usize, ncols: usize, entries: Vec<(usize, usize, f64)>) -> Triplets {
    Triplets {
        nrows,
        ncols,
        entries,
    }
}

fn sym(g: &Mat3) -> Mat3 {
    0.5 * (g + g.transpose())
}

/// Element-local data at a velocity quadrature point.
struct VolumePoint {
    x: Vec3,
    w: f64,
    basis: BasisEval,
}

fn velocity_volume_points(vel: &BdmSpace, t: usize, rule: &TetRule) -> Vec<VolumePoint> {
    let g = vel.geometry(t);
    rule.iter()
        .map(|(p, w)| {
            let xr = Vec3::from(*p);
            let mut basis = BasisEval::default();
            vel.eval(t, &xr, &mut basis);
            VolumePoint {
                x: g.to_physical(&xr),
                w: w * g.det.abs(),
                basis,
            }
        })
        .collect()
}

/// Jump and average of every basis function with support on a face.
pub(crate) struct FaceSide {
    /// Owner DOFs followed by neighbor DOFs.
    pub dofs: Vec<usize>,
    pub points: Vec<FacePoint>,
}

pub(crate) struct FacePoint {
    pub x: Vec3,
    pub w: f64,
    pub jump: Vec<Vec3>,
    pub avg: Vec<Vec3>,
    pub jump_grad: Vec<Mat3>,
    pub avg_grad: Vec<Mat3>,
}

pub(crate) fn face_side(vel: &BdmSpace, f: usize, rule: &TriRule) -> FaceSide {
    let mesh = vel.mesh();
    let rec = &mesh.faces[f];
    let owner_dofs = vel.local_dofs(rec.owner);
    let nloc = owner_dofs.len();
    let mut dofs = owner_dofs;
    if let Some(nb) = rec.neighbor {
        dofs.extend(vel.local_dofs(nb));
    }
    let n = dofs.len();
    let avg_owner = if rec.is_boundary() { 1.0 } else { 0.5 };
    let mut ev = BasisEval::default();
    let points = map_to_face(rule, &mesh.face_vertices(f))
        .into_iter()
        .map(|(x, w)| {
            let mut p = FacePoint {
                x,
                w,
                jump: Vec::with_capacity(n),
                avg: Vec::with_capacity(n),
                jump_grad: Vec::with_capacity(n),
                avg_grad: Vec::with_capacity(n),
            };
            vel.eval_at(rec.owner, &x, &mut ev);
            for i in 0..nloc {
                p.jump.push(ev.values[i]);
                p.avg.push(avg_owner * ev.values[i]);
                p.jump_grad.push(ev.grads[i]);
                p.avg_grad.push(avg_owner * ev.grads[i]);
            }
            if let Some(nb) = rec.neighbor {
                vel.eval_at(nb, &x, &mut ev);
                for i in 0..nloc {
                    p.jump.push(-ev.values[i]);
                    p.avg.push(0.5 * ev.values[i]);
                    p.jump_grad.push(-ev.grads[i]);
                    p.avg_grad.push(0.5 * ev.grads[i]);
                }
            }
            p
        })
        .collect();
    FaceSide { dofs, points }
}

/// Velocity mass matrix `(u, v)`.
pub fn assemble_velocity_mass(vel: &BdmSpace, exec: Execution) -> Result<Triplets> {
    let rule = tet_rule(matrix_degree(vel.degree()))?;
    let n = vel.local_dim();
    let entries = collect_ordered(vel.mesh().num_tets(), exec, |t, out| {
        let mut local = vec![0.0; n * n];
        for q in velocity_volume_points(vel, t, &rule) {
            let v = &q.basis.values;
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += q.w * v[i].dot(&v[j]);
                }
            }
        }
        let dofs = vel.local_dofs(t);
        scatter(&dofs, &dofs, &local, out);
    });
    Ok(triplets(vel.num_dofs(), vel.num_dofs(), entries))
}

/// Symmetric interior penalty form `a^S_h` over all faces (boundary jumps
/// are traces).
pub fn assemble_fluid_diffusion(vel: &BdmSpace, stab: &StabParams, exec: Execution) -> Result<Triplets> {
    let deg = matrix_degree(vel.degree());
    let trule = tet_rule(deg)?;
    let frule = tri_rule(deg)?;
    let mesh = vel.mesh();
    let n = vel.local_dim();
    let mut entries = collect_ordered(mesh.num_tets(), exec, |t, out| {
        let mut local = vec![0.0; n * n];
        for q in velocity_volume_points(vel, t, &trule) {
            let eps: Vec<Mat3> = q.basis.grads.iter().map(sym).collect();
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += q.w * eps[i].dot(&eps[j]);
                }
            }
        }
        let dofs = vel.local_dofs(t);
        scatter(&dofs, &dofs, &local, out);
    });
    entries.extend(collect_ordered(mesh.num_faces(), exec, |f, out| {
        let rec = &mesh.faces[f];
        let side = face_side(vel, f, &frule);
        let m = side.dofs.len();
        let pen = stab.mu_a / rec.h_f;
        let nrm = rec.normal;
        let mut local = vec![0.0; m * m];
        for p in &side.points {
            let flux: Vec<Vec3> = p.avg_grad.iter().map(|g| sym(g) * nrm).collect();
            for i in 0..m {
                for j in 0..m {
                    local[i * m + j] += p.w
                        * (-flux[j].dot(&p.jump[i]) - p.jump[j].dot(&flux[i])
                            + pen * p.jump[j].dot(&p.jump[i]));
                }
            }
        }
        scatter(&side.dofs, &side.dofs, &local, out);
    }));
    Ok(triplets(vel.num_dofs(), vel.num_dofs(), entries))
}

/// Boundary data part of `a^S_h` moved to the right-hand side:
/// `sum_f mu_a h_f^{-1} (g, v)_f - (g, eps(v) n_f)_f` over boundary faces.
pub fn diffusion_boundary_rhs(
    vel: &BdmSpace,
    stab: &StabParams,
    g: &(dyn Fn(&Vec3) -> Vec3 + Sync),
    exec: Execution,
) -> Result<Vec<f64>> {
    let frule = tri_rule(LOAD_DEGREE)?;
    let mesh = vel.mesh();
    let boundary: Vec<usize> = mesh.boundary_faces().map(|(f, _)| f).collect();
    let entries = collect_ordered(boundary.len(), exec, |b, out| {
        let f = boundary[b];
        let rec = &mesh.faces[f];
        let dofs = vel.local_dofs(rec.owner);
        let mut local = vec![0.0; dofs.len()];
        let mut ev = BasisEval::default();
        for (x, w) in map_to_face(&frule, &mesh.face_vertices(f)) {
            let gx = g(&x);
            vel.eval_at(rec.owner, &x, &mut ev);
            for (i, l) in local.iter_mut().enumerate() {
                *l += w * (stab.mu_a / rec.h_f * gx.dot(&ev.values[i]) - gx.dot(&(sym(&ev.grads[i]) * rec.normal)));
            }
        }
        out.extend(dofs.into_iter().zip(local));
    });
    Ok(accumulate(vel.num_dofs(), entries))
}

fn accumulate(n: usize, entries: Vec<(usize, f64)>) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (d, v) in entries {
        out[d] += v;
    }
    out
}

/// Upwind convection form `c_h` (interior faces only).
pub fn assemble_fluid_convection(
    vel: &BdmSpace,
    chi: &AdvectionField,
    stab: &StabParams,
    exec: Execution,
) -> Result<Triplets> {
    let nd = vel.num_dofs();
    if chi.is_zero() {
        return Ok(Triplets::new(nd, nd));
    }
    let deg = matrix_degree(vel.degree());
    let trule = tet_rule(deg)?;
    let frule = tri_rule(deg)?;
    let mesh = vel.mesh();
    let n = vel.local_dim();
    let mut entries = collect_ordered(mesh.num_tets(), exec, |t, out| {
        let mut local = vec![0.0; n * n];
        let mut scratch = BasisEval::default();
        for q in velocity_volume_points(vel, t, &trule) {
            let c = chi.eval(vel, t, &q.x, &mut scratch);
            let adv: Vec<Vec3> = q.basis.grads.iter().map(|g| g * c).collect();
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += q.w * adv[j].dot(&q.basis.values[i]);
                }
            }
        }
        let dofs = vel.local_dofs(t);
        scatter(&dofs, &dofs, &local, out);
    });
    let interior: Vec<usize> = mesh.interior_faces().map(|(f, _)| f).collect();
    entries.extend(collect_ordered(interior.len(), exec, |i_f, out| {
        let f = interior[i_f];
        let rec = &mesh.faces[f];
        let side = face_side(vel, f, &frule);
        let m = side.dofs.len();
        let mut scratch = BasisEval::default();
        let cn: Vec<f64> = side
            .points
            .iter()
            .map(|p| chi.eval(vel, rec.owner, &p.x, &mut scratch).dot(&rec.normal))
            .collect();
        let face_max = cn.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let mut local = vec![0.0; m * m];
        for (p, &c) in side.points.iter().zip(&cn) {
            let up = match stab.variant {
                FormVariant::Full => c.abs(),
                FormVariant::Simplified => face_max,
            };
            for i in 0..m {
                for j in 0..m {
                    local[i * m + j] +=
                        p.w * (-c * p.jump[j].dot(&p.avg[i]) + stab.mu_c * up * p.jump[j].dot(&p.jump[i]));
                }
            }
        }
        scatter(&side.dofs, &side.dofs, &local, out);
    }));
    Ok(triplets(nd, nd, entries))
}

/// CIP form `J_h` along `Theta`; empty for fStab.
pub fn assemble_cip(
    vel: &BdmSpace,
    theta: &AdvectionField,
    stab: &StabParams,
    exec: Execution,
) -> Result<Triplets> {
    let nd = vel.num_dofs();
    if theta.is_zero() || stab.scheme == Scheme::FStab {
        return Ok(Triplets::new(nd, nd));
    }
    let frule = tri_rule(matrix_degree(vel.degree()))?;
    let mesh = vel.mesh();
    let interior: Vec<usize> = mesh.interior_faces().map(|(f, _)| f).collect();
    let entries = collect_ordered(interior.len(), exec, |i_f, out| {
        let f = interior[i_f];
        let rec = &mesh.faces[f];
        let side = face_side(vel, f, &frule);
        let m = side.dofs.len();
        let h2 = rec.h_f * rec.h_f;
        let mut scratch = BasisEval::default();
        let th: Vec<Vec3> = side
            .points
            .iter()
            .map(|p| theta.eval(vel, rec.owner, &p.x, &mut scratch))
            .collect();
        let th_max2 = th.iter().fold(0.0_f64, |a, t| a.max(t.norm_squared()));
        let mut local = vec![0.0; m * m];
        for (p, t) in side.points.iter().zip(&th) {
            match stab.variant {
                FormVariant::Full => {
                    let cj: Vec<Vec3> = p.jump.iter().map(|j| t.cross(j)).collect();
                    let gj: Vec<Vec3> = p.jump_grad.iter().map(|g| g * t).collect();
                    for i in 0..m {
                        for j in 0..m {
                            local[i * m + j] +=
                                p.w * (stab.mu_j1 * cj[j].dot(&cj[i]) + stab.mu_j2 * h2 * gj[j].dot(&gj[i]));
                        }
                    }
                }
                FormVariant::Simplified => {
                    for i in 0..m {
                        for j in 0..m {
                            local[i * m + j] += p.w
                                * th_max2
                                * (stab.mu_j1 * p.jump[j].dot(&p.jump[i])
                                    + stab.mu_j2 * h2 * p.jump_grad[j].dot(&p.jump_grad[i]));
                        }
                    }
                }
            }
        }
        scatter(&side.dofs, &side.dofs, &local, out);
    });
    Ok(triplets(nd, nd, entries))
}

/// Magnetic mass matrix `(B, H)`.
pub fn assemble_magnetic_mass(mag: &LagrangeSpace, exec: Execution) -> Result<Triplets> {
    let rule = tet_rule(2 * mag.degree())?;
    magnetic_volume_form(mag, &rule, exec, |_, val, _, local, n| {
        let nn = val.len();
        for a in 0..nn {
            for b in 0..nn {
                for c in 0..3 {
                    local[(3 * a + c) * n + 3 * b + c] += val[a] * val[b];
                }
            }
        }
    })
}

/// `a^M(B, H) = (curl B, curl H) + (div B, div H)`.
pub fn assemble_magnetic(mag: &LagrangeSpace, exec: Execution) -> Result<Triplets> {
    let rule = tet_rule(2 * mag.degree())?;
    magnetic_volume_form(mag, &rule, exec, |_, _, grad, local, n| {
        let nn = grad.len();
        for a in 0..nn {
            for b in 0..nn {
                let gg = grad[a].dot(&grad[b]);
                for c in 0..3 {
                    for d in 0..3 {
                        let mut v = grad[a][c] * grad[b][d] - grad[a][d] * grad[b][c];
                        if c == d {
                            v += gg;
                        }
                        local[(3 * a + c) * n + 3 * b + d] += v;
                    }
                }
            }
        }
    })
}

/// Shared element loop for forms on the magnetic space: `kernel` adds the
/// integrand (without weight) for one quadrature point.
fn magnetic_volume_form<K>(mag: &LagrangeSpace, rule: &TetRule, exec: Execution, kernel: K) -> Result<Triplets>
where
    K: Fn(&Vec3, &[f64], &[Vec3], &mut [f64], usize) + Sync,
{
    let entries = collect_ordered(mag.mesh().num_tets(), exec, |t, out| {
        let g = mag.geometry(t);
        let dofs = mag.local_dofs(t);
        let n = dofs.len();
        let mut local = vec![0.0; n * n];
        let mut point = vec![0.0; n * n];
        let mut val = Vec::new();
        let mut grad = Vec::new();
        for (p, w) in rule.iter() {
            let xr = Vec3::from(*p);
            mag.shape(t, &xr, &mut val, &mut grad);
            point.iter_mut().for_each(|v| *v = 0.0);
            kernel(&g.to_physical(&xr), &val, &grad, &mut point, n);
            let wd = w * g.det.abs();
            for (l, v) in local.iter_mut().zip(&point) {
                *l += wd * v;
            }
        }
        scatter(&dofs, &dofs, &local, out);
    });
    Ok(triplets(mag.num_dofs(), mag.num_dofs(), entries))
}

/// Coupling matrix `D[v, H] = d(H, v) = (curl H x Theta, v)`, of shape
/// `n_u x n_B`.
pub fn assemble_coupling(
    mag: &LagrangeSpace,
    vel: &BdmSpace,
    theta: &AdvectionField,
    exec: Execution,
) -> Result<Triplets> {
    let (nu, nb) = (vel.num_dofs(), mag.num_dofs());
    if theta.is_zero() {
        return Ok(Triplets::new(nu, nb));
    }
    let rule = tet_rule(matrix_degree(vel.degree()))?;
    let entries = collect_ordered(vel.mesh().num_tets(), exec, |t, out| {
        let rows = vel.local_dofs(t);
        let cols = mag.local_dofs(t);
        let (nr, nc) = (rows.len(), cols.len());
        let mut local = vec![0.0; nr * nc];
        let mut scratch = BasisEval::default();
        let mut val = Vec::new();
        let mut grad = Vec::new();
        for q in velocity_volume_points(vel, t, &rule) {
            let th = theta.eval(vel, t, &q.x, &mut scratch);
            let xr = mag.geometry(t).to_reference(&q.x);
            mag.shape(t, &xr, &mut val, &mut grad);
            for (a, ga) in grad.iter().enumerate() {
                for c in 0..3 {
                    let mut e = Vec3::zeros();
                    e[c] = 1.0;
                    let force = ga.cross(&e).cross(&th);
                    for i in 0..nr {
                        local[i * nc + 3 * a + c] += q.w * force.dot(&q.basis.values[i]);
                    }
                }
            }
        }
        scatter(&rows, &cols, &local, out);
    });
    Ok(triplets(nu, nb, entries))
}

/// Divergence matrix `b(v, q) = (div v, q)`, of shape `n_p x n_u`.
pub fn assemble_divergence(vel: &BdmSpace, pres: &PressureSpace, exec: Execution) -> Result<Triplets> {
    let rule = tet_rule(matrix_degree(vel.degree()))?;
    let entries = collect_ordered(vel.mesh().num_tets(), exec, |t, out| {
        let cols = vel.local_dofs(t);
        let rows: Vec<usize> = pres.local_dofs(t).collect();
        let (nr, nc) = (rows.len(), cols.len());
        let mut local = vec![0.0; nr * nc];
        let mut psi = Vec::new();
        for q in velocity_volume_points(vel, t, &rule) {
            let xr = vel.geometry(t).to_reference(&q.x);
            pres.eval(t, &xr, &mut psi);
            for r in 0..nr {
                for (j, g) in q.basis.grads.iter().enumerate() {
                    local[r * nc + j] += q.w * psi[r] * g.trace();
                }
            }
        }
        scatter(&rows, &cols, &local, out);
    });
    Ok(triplets(pres.num_dofs(), vel.num_dofs(), entries))
}

/// `(f, v)` for every velocity basis function.
pub fn assemble_velocity_load(
    vel: &BdmSpace,
    f: &(dyn Fn(&Vec3) -> Vec3 + Sync),
    exec: Execution,
) -> Result<Vec<f64>> {
    let rule = tet_rule(LOAD_DEGREE)?;
    let entries = collect_ordered(vel.mesh().num_tets(), exec, |t, out| {
        let dofs = vel.local_dofs(t);
        let mut local = vec![0.0; dofs.len()];
        for q in velocity_volume_points(vel, t, &rule) {
            let fx = f(&q.x);
            for (l, v) in local.iter_mut().zip(&q.basis.values) {
                *l += q.w * fx.dot(v);
            }
        }
        out.extend(dofs.into_iter().zip(local));
    });
    Ok(accumulate(vel.num_dofs(), entries))
}

/// `(G, H)` plus, when given, the boundary term `int_{dOmega} flux(x, n) . H`.
pub fn assemble_magnetic_load(
    mag: &LagrangeSpace,
    g: &(dyn Fn(&Vec3) -> Vec3 + Sync),
    flux: Option<&(dyn Fn(&Vec3, &Vec3) -> Vec3 + Sync)>,
    exec: Execution,
) -> Result<Vec<f64>> {
    let rule = tet_rule(LOAD_DEGREE)?;
    let mesh = mag.mesh();
    let mut entries = collect_ordered(mesh.num_tets(), exec, |t, out| {
        let geom = mag.geometry(t);
        let dofs = mag.local_dofs(t);
        let mut local = vec![0.0; dofs.len()];
        let mut val = Vec::new();
        let mut grad = Vec::new();
        for (p, w) in rule.iter() {
            let xr = Vec3::from(*p);
            let gx = g(&geom.to_physical(&xr));
            mag.shape(t, &xr, &mut val, &mut grad);
            let wd = w * geom.det.abs();
            for (a, na) in val.iter().enumerate() {
                for c in 0..3 {
                    local[3 * a + c] += wd * gx[c] * na;
                }
            }
        }
        out.extend(dofs.into_iter().zip(local));
    });
    if let Some(flux) = flux {
        let frule = tri_rule(LOAD_DEGREE)?;
        let boundary: Vec<usize> = mesh.boundary_faces().map(|(f, _)| f).collect();
        entries.extend(collect_ordered(boundary.len(), exec, |b, out| {
            let f = boundary[b];
            let rec = &mesh.faces[f];
            let t = rec.owner;
            let dofs = mag.local_dofs(t);
            let mut local = vec![0.0; dofs.len()];
            let mut val = Vec::new();
            let mut grad = Vec::new();
            for (x, w) in map_to_face(&frule, &mesh.face_vertices(f)) {
                let j = flux(&x, &rec.normal);
                mag.shape(t, &mag.geometry(t).to_reference(&x), &mut val, &mut grad);
                for (a, na) in val.iter().enumerate() {
                    for c in 0..3 {
                        local[3 * a + c] += w * j[c] * na;
                    }
                }
            }
            out.extend(dofs.into_iter().zip(local));
        }));
    }
    Ok(accumulate(mag.num_dofs(), entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TetMesh;

    fn spaces(n: usize, k: usize) -> (BdmSpace, PressureSpace, LagrangeSpace) {
        let mesh = Arc::new(TetMesh::structured_cube(n).unwrap());
        (
            BdmSpace::new(mesh.clone(), k).unwrap(),
            PressureSpace::new(mesh.clone(), k).unwrap(),
            LagrangeSpace::new(mesh, k).unwrap(),
        )
    }

    fn quad(a: &Triplets, x: &[f64], y: &[f64]) -> f64 {
        a.to_csr().bilinear(x, y)
    }

    #[test]
    fn parsing_and_validation() {
        assert_eq!("fstab".parse::<Scheme>().unwrap(), Scheme::FStab);
        assert_eq!("mfStab".parse::<Scheme>().unwrap(), Scheme::MfStab);
        assert!("x".parse::<Scheme>().is_err());
        assert_eq!("simplified".parse::<FormVariant>().unwrap(), FormVariant::Simplified);
        assert!(PhysicalParams::with_nu(0.0).validate().is_err());
        let mut s = StabParams::defaults(2);
        assert_eq!(s.mu_a, 20.0);
        s.mu_a = 0.0;
        assert!(matches!(s.validate(), Err(Error::Config { ref field, .. }) if field == "mu_a"));
    }

    #[test]
    fn zero_fields_give_empty_blocks() {
        let (v, _, m) = spaces(1, 1);
        let s = StabParams::defaults(1);
        let ex = Execution::Serial;
        assert!(assemble_fluid_convection(&v, &AdvectionField::Zero, &s, ex).unwrap().is_empty());
        assert!(assemble_cip(&v, &AdvectionField::Zero, &s, ex).unwrap().is_empty());
        assert!(assemble_coupling(&m, &v, &AdvectionField::Zero, ex).unwrap().is_empty());
        let f = StabParams {
            scheme: Scheme::FStab,
            ..s
        };
        let th = AdvectionField::analytic(|_| Vec3::new(1.0, 0.0, 0.0));
        assert!(assemble_cip(&v, &th, &f, ex).unwrap().is_empty());
    }

    #[test]
    fn constant_fields() {
        let (v, p, m) = spaces(2, 1);
        let ex = Execution::Serial;
        let c = v.interpolate(&|_| Vec3::new(0.3, -1.0, 2.0), 4).unwrap();
        // constant velocity: zero divergence row and zero convection energy
        let b = assemble_divergence(&v, &p, ex).unwrap().to_csr();
        assert!(b.matvec(&c).iter().all(|r| r.abs() < 1e-13));
        let chi = AdvectionField::analytic(|_| Vec3::new(1.0, 0.0, 0.0));
        let conv = assemble_fluid_convection(&v, &chi, &StabParams::defaults(1), ex).unwrap();
        assert!(quad(&conv, &c, &c).abs() < 1e-12);
        // mass of a constant equals |c|^2 |Omega|
        let mass = assemble_velocity_mass(&v, ex).unwrap();
        assert!((quad(&mass, &c, &c) - (0.09 + 1.0 + 4.0)).abs() < 1e-12);
        let h = m.interpolate(&|_| Vec3::new(1.0, 2.0, 3.0));
        let am = assemble_magnetic(&m, ex).unwrap();
        assert!(quad(&am, &h, &h).abs() < 1e-12);
        let mm = assemble_magnetic_mass(&m, ex).unwrap();
        assert!((quad(&mm, &h, &h) - 14.0).abs() < 1e-12);
        let th = AdvectionField::analytic(|x| Vec3::new(x.y, 1.0, x.x));
        let d = assemble_coupling(&m, &v, &th, ex).unwrap().to_csr();
        assert!(d.matvec(&h).iter().all(|r| r.abs() < 1e-13));
    }

    #[test]
    fn magnetic_closed_form() {
        // H = (y, 0, 0): curl H = (0, 0, -1), div H = 0
        let (_, _, m) = spaces(2, 1);
        let h = m.interpolate(&|x| Vec3::new(x.y, 0.0, 0.0));
        let am = assemble_magnetic(&m, Execution::Serial).unwrap();
        assert!((quad(&am, &h, &h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rigid_motion_energy_is_boundary_penalty() {
        // eps(v) = 0 and interior jumps vanish for a rigid motion, so
        // a(v, v) reduces to the boundary penalty, which is also the data
        // functional evaluated at g = v.
        let (v, _, _) = spaces(2, 1);
        let s = StabParams::defaults(1);
        let rigid = |x: &Vec3| Vec3::new(x.y, -x.x, 1.0);
        let c = v.interpolate(&rigid, 4).unwrap();
        let a = assemble_fluid_diffusion(&v, &s, Execution::Serial).unwrap();
        let rhs = diffusion_boundary_rhs(&v, &s, &rigid, Execution::Serial).unwrap();
        let lhs = quad(&a, &c, &c);
        let data: f64 = rhs.iter().zip(&c).map(|(r, x)| r * x).sum();
        let mesh = v.mesh();
        let penalty: f64 = mesh
            .boundary_faces()
            .map(|(f, rec)| {
                let rule = tri_rule(4).unwrap();
                map_to_face(&rule, &mesh.face_vertices(f))
                    .iter()
                    .map(|(x, w)| w * s.mu_a / rec.h_f * rigid(x).norm_squared())
                    .sum::<f64>()
            })
            .sum();
        assert!((lhs - penalty).abs() < 1e-11 * penalty);
        assert!((data - penalty).abs() < 1e-11 * penalty);
    }

    #[test]
    fn divergence_of_single_tet_mode() {
        // Oracle: quadrature of div v times the constant pressure mode.
        let (v, p, _) = spaces(1, 1);
        let b = assemble_divergence(&v, &p, Execution::Serial).unwrap().to_csr();
        let mut ev = BasisEval::default();
        let t = 3;
        let dofs = v.local_dofs(t);
        v.eval(t, &Vec3::new(0.25, 0.25, 0.25), &mut ev);
        let mut psi = Vec::new();
        p.eval(t, &Vec3::zeros(), &mut psi);
        let vol = v.mesh().volume(t);
        let row = p.local_dofs(t).next().unwrap();
        for (i, &d) in dofs.iter().enumerate() {
            let mut e = vec![0.0; v.num_dofs()];
            e[d] = 1.0;
            let bv = b.matvec(&e)[row];
            // other tets sharing the face DOF contribute to their own rows
            assert!((bv - vol * psi[0] * ev.grads[i].trace()).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_blocks_and_serial_parallel_identity() {
        let (v, _, m) = spaces(2, 1);
        let s = StabParams::defaults(1);
        let th = AdvectionField::analytic(crate::mms::magnetic);
        for ex in [Execution::Serial, Execution::Parallel] {
            for a in [
                assemble_fluid_diffusion(&v, &s, ex).unwrap(),
                assemble_cip(&v, &th, &s, ex).unwrap(),
                assemble_velocity_mass(&v, ex).unwrap(),
            ] {
                let a = a.to_csr();
                assert!(a.symmetry_defect() <= 1e-12 * a.max_abs());
            }
            let am = assemble_magnetic(&m, ex).unwrap().to_csr();
            assert!(am.symmetry_defect() <= 1e-12 * am.max_abs());
        }
        let chi = AdvectionField::analytic(crate::mms::velocity);
        let a = assemble_fluid_convection(&v, &chi, &s, Execution::Serial).unwrap().to_csr();
        let b = assemble_fluid_convection(&v, &chi, &s, Execution::Parallel).unwrap().to_csr();
        assert_eq!(a, b);
    }

    #[test]
    fn simplified_matches_full_for_constant_fields() {
        let (v, _, _) = spaces(2, 1);
        let full = StabParams::defaults(1);
        let simp = StabParams {
            variant: FormVariant::Simplified,
            ..full
        };
        let chi = AdvectionField::analytic(|_| Vec3::new(0.2, 0.5, -0.3));
        let ex = Execution::Serial;
        let a = assemble_fluid_convection(&v, &chi, &full, ex).unwrap().to_csr();
        let b = assemble_fluid_convection(&v, &chi, &simp, ex).unwrap().to_csr();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-13);
        }
        // CIP coincides when Theta is constant and parallel to every gradient
        // jump direction only in the jump part; compare the jump part alone.
        let th = AdvectionField::analytic(|_| Vec3::new(0.0, 0.0, 2.0));
        let j_only = |s: StabParams| StabParams { mu_j2: 0.0, ..s };
        let a = assemble_cip(&v, &th, &j_only(full), ex).unwrap().to_csr();
        let b = assemble_cip(&v, &th, &j_only(simp), ex).unwrap().to_csr();
        let c = v.interpolate(&|x| Vec3::new(x.z * x.z, 0.0, x.x), 6).unwrap();
        // full: |Theta x [[u]]|^2 <= |Theta|^2 |[[u]]|^2 = simplified
        assert!(a.bilinear(&c, &c) <= b.bilinear(&c, &c) + 1e-14);
        assert!(a.bilinear(&c, &c) >= 0.0);
    }
}
