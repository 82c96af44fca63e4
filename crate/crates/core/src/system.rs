//! The coupled block system, essential constraints and the direct solve.
//!
//! Unknowns are ordered `[u; p; B; lambda]`, where `lambda` is the single
//! multiplier enforcing a zero-mean pressure. Rows read
//!
//! ```text
//! u:      (sigma_S M + nu_S A_S + C + J) u + B^T p - D B          = f + data
//! p:      B_div u + m lambda                                      = 0
//! B:      D^T u + (sigma_M M_B + nu_M A_M) B                      = G + flux
//! lambda: m^T p                                                   = 0
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fespace::{BasisEval, BdmSpace, LagrangeSpace, PressureSpace, INTERP_DEGREE};
use crate::forms::{self, AdvectionFields, PhysicalParams, StabParams, VectorFn};
use crate::mesh::TetMesh;
use crate::mms::Manufactured;
use crate::quadrature::tet_rule;
use crate::sparse::{norm2, CsrMatrix, Triplets};
use crate::{Execution, Vec3};

/// The three discrete spaces on one mesh.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub mesh: Arc<TetMesh>,
    pub vel: BdmSpace,
    pub pres: PressureSpace,
    pub mag: LagrangeSpace,
}

impl Spaces {
    pub fn new(mesh: Arc<TetMesh>, k: usize) -> Result<Self> {
        Ok(Spaces {
            vel: BdmSpace::new(mesh.clone(), k)?,
            pres: PressureSpace::new(mesh.clone(), k)?,
            mag: LagrangeSpace::new(mesh.clone(), k)?,
            mesh,
        })
    }

    pub fn degree(&self) -> usize {
        self.vel.degree()
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(self.vel.num_dofs(), self.pres.num_dofs(), self.mag.num_dofs())
    }
}

/// Offsets of the four unknown blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub n_u: usize,
    pub n_p: usize,
    pub n_b: usize,
}

impl BlockLayout {
    pub fn new(n_u: usize, n_p: usize, n_b: usize) -> Self {
        BlockLayout { n_u, n_p, n_b }
    }

    pub fn p0(&self) -> usize {
        self.n_u
    }

    pub fn b0(&self) -> usize {
        self.n_u + self.n_p
    }

    pub fn lambda(&self) -> usize {
        self.n_u + self.n_p + self.n_b
    }

    pub fn size(&self) -> usize {
        self.lambda() + 1
    }
}

/// Right-hand sides and boundary data of one problem.
#[derive(Clone)]
pub struct ProblemData {
    pub momentum: VectorFn,
    pub induction: VectorFn,
    /// Full velocity trace `g` on the boundary.
    pub velocity_trace: VectorFn,
    /// Field whose normal components are imposed at boundary nodes.
    pub magnetic_trace: VectorFn,
    /// Natural boundary term of the induction equation, `(x, n) -> j`.
    pub induction_flux: Option<Arc<dyn Fn(&Vec3, &Vec3) -> Vec3 + Send + Sync>>,
}

impl ProblemData {
    pub fn homogeneous() -> Self {
        let zero: VectorFn = Arc::new(|_| Vec3::zeros());
        ProblemData {
            momentum: zero.clone(),
            induction: zero.clone(),
            velocity_trace: zero.clone(),
            magnetic_trace: zero,
            induction_flux: None,
        }
    }

    pub fn manufactured(m: &Manufactured) -> Self {
        let (a, b, c, d) = (*m, *m, *m, *m);
        ProblemData {
            momentum: Arc::new(move |x| a.momentum_forcing(x)),
            induction: Arc::new(move |x| b.induction_forcing(x)),
            velocity_trace: Arc::new(move |x| c.velocity_trace(x)),
            magnetic_trace: Arc::new(crate::mms::magnetic),
            induction_flux: Some(Arc::new(move |x, n| d.induction_flux(x, n))),
        }
    }
}

/// Every assembled form, unscaled.
#[derive(Clone, Debug)]
pub struct FormBlocks {
    pub mass_u: Triplets,
    pub diffusion: Triplets,
    pub convection: Triplets,
    pub cip: Triplets,
    pub mass_b: Triplets,
    pub magnetic: Triplets,
    /// `n_u x n_B`.
    pub coupling: Triplets,
    /// `n_p x n_u`.
    pub divergence: Triplets,
}

pub fn assemble_forms(
    spaces: &Spaces,
    stab: &StabParams,
    fields: &AdvectionFields,
    exec: Execution,
) -> Result<FormBlocks> {
    let (v, p, m) = (&spaces.vel, &spaces.pres, &spaces.mag);
    Ok(FormBlocks {
        mass_u: forms::assemble_velocity_mass(v, exec)?,
        diffusion: forms::assemble_fluid_diffusion(v, stab, exec)?,
        convection: forms::assemble_fluid_convection(v, &fields.chi, stab, exec)?,
        cip: forms::assemble_cip(v, &fields.theta, stab, exec)?,
        mass_b: forms::assemble_magnetic_mass(m, exec)?,
        magnetic: forms::assemble_magnetic(m, exec)?,
        coupling: forms::assemble_coupling(m, v, &fields.theta, exec)?,
        divergence: forms::assemble_divergence(v, p, exec)?,
    })
}

/// Assembled system before constraint elimination.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub layout: BlockLayout,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// `(dof, value)` pairs in global numbering.
    pub constraints: Vec<(usize, f64)>,
}

/// Builds the global matrix from form blocks.
pub fn block_matrix(
    layout: BlockLayout,
    blocks: &FormBlocks,
    mean: &[f64],
    params: &PhysicalParams,
) -> Result<CsrMatrix> {
    let checks = [
        (blocks.mass_u.nrows, layout.n_u, "velocity mass"),
        (blocks.diffusion.nrows, layout.n_u, "diffusion"),
        (blocks.convection.nrows, layout.n_u, "convection"),
        (blocks.cip.nrows, layout.n_u, "cip"),
        (blocks.mass_b.nrows, layout.n_b, "magnetic mass"),
        (blocks.magnetic.nrows, layout.n_b, "magnetic"),
        (blocks.coupling.nrows, layout.n_u, "coupling rows"),
        (blocks.coupling.ncols, layout.n_b, "coupling columns"),
        (blocks.divergence.nrows, layout.n_p, "divergence rows"),
        (blocks.divergence.ncols, layout.n_u, "divergence columns"),
        (mean.len(), layout.n_p, "mean functional"),
    ];
    for (got, want, what) in checks {
        if got != want {
            return Err(Error::Consistency(format!("{what}: block size {got}, expected {want}")));
        }
    }
    let n = layout.size();
    let (p0, b0, l0) = (layout.p0(), layout.b0(), layout.lambda());
    let mut t = Triplets::new(n, n);
    t.add_block(&blocks.mass_u, 0, 0, params.sigma_s);
    t.add_block(&blocks.diffusion, 0, 0, params.nu_s);
    t.add_block(&blocks.convection, 0, 0, 1.0);
    t.add_block(&blocks.cip, 0, 0, 1.0);
    t.add_block(&blocks.coupling, 0, b0, -1.0);
    t.add_block_transposed(&blocks.divergence, 0, p0, 1.0);
    t.add_block(&blocks.divergence, p0, 0, 1.0);
    for (i, &m) in mean.iter().enumerate() {
        t.push(p0 + i, l0, m);
        t.push(l0, p0 + i, m);
    }
    t.add_block_transposed(&blocks.coupling, b0, 0, 1.0);
    t.add_block(&blocks.mass_b, b0, b0, params.sigma_m);
    t.add_block(&blocks.magnetic, b0, b0, params.nu_m);
    Ok(t.to_csr())
}

/// Essential conditions: normal moments of `g` on boundary faces and normal
/// components of the magnetic trace at boundary nodes.
pub fn essential_constraints(spaces: &Spaces, data: &ProblemData) -> Result<Vec<(usize, f64)>> {
    let layout = spaces.layout();
    let mut out = Vec::new();
    let g = data.velocity_trace.as_ref();
    for (f, _) in spaces.mesh.boundary_faces() {
        let moments = spaces.vel.normal_moments(f, &g, INTERP_DEGREE)?;
        for (j, m) in moments.into_iter().enumerate() {
            out.push((spaces.vel.face_dof(f, j), m));
        }
    }
    for c in spaces.mag.constraints() {
        let b = (data.magnetic_trace)(&spaces.mag.nodes()[c.node]);
        out.push((layout.b0() + c.dof, b[c.axis]));
    }
    Ok(out)
}

pub fn assemble_system(
    spaces: &Spaces,
    params: &PhysicalParams,
    stab: &StabParams,
    fields: &AdvectionFields,
    data: &ProblemData,
    exec: Execution,
) -> Result<BlockSystem> {
    params.validate()?;
    stab.validate()?;
    let layout = spaces.layout();
    let blocks = assemble_forms(spaces, stab, fields, exec)?;
    let matrix = block_matrix(layout, &blocks, &spaces.pres.mean_functional(), params)?;
    let mut rhs = vec![0.0; layout.size()];
    let fu = forms::assemble_velocity_load(&spaces.vel, data.momentum.as_ref(), exec)?;
    let gu = forms::diffusion_boundary_rhs(&spaces.vel, stab, data.velocity_trace.as_ref(), exec)?;
    for (i, r) in rhs[..layout.n_u].iter_mut().enumerate() {
        *r = fu[i] + params.nu_s * gu[i];
    }
    let flux = data.induction_flux.as_ref().map(|j| {
        let j: &(dyn Fn(&Vec3, &Vec3) -> Vec3 + Sync) = j.as_ref();
        j
    });
    let fb = forms::assemble_magnetic_load(&spaces.mag, data.induction.as_ref(), flux, exec)?;
    rhs[layout.b0()..layout.lambda()].copy_from_slice(&fb);
    Ok(BlockSystem {
        layout,
        matrix,
        rhs,
        constraints: essential_constraints(spaces, data)?,
    })
}

/// System after symmetric elimination of the essential constraints.
#[derive(Clone, Debug)]
pub struct ConstrainedSystem {
    pub layout: BlockLayout,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Zeroes constrained rows and columns, puts 1 on their diagonal, moves the
/// known column contributions to the right-hand side and sets the
/// prescribed values there.
pub fn apply_constraints(sys: &BlockSystem) -> Result<ConstrainedSystem> {
    let n = sys.layout.size();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(d, v) in &sys.constraints {
        if d >= n {
            return Err(Error::Consistency(format!("constraint on dof {d} outside system of size {n}")));
        }
        fixed[d] = Some(v);
    }
    let mut rhs = sys.rhs.clone();
    let mut t = Triplets::new(n, n);
    for r in 0..n {
        if fixed[r].is_some() {
            continue;
        }
        for (c, v) in sys.matrix.row(r) {
            match fixed[c] {
                Some(g) => rhs[r] -= v * g,
                None => t.push(r, c, v),
            }
        }
    }
    for (d, f) in fixed.iter().enumerate() {
        if let Some(g) = f {
            t.push(d, d, 1.0);
            rhs[d] = *g;
        }
    }
    let matrix = t.to_csr();
    if let Some(r) = (0..n).find(|&r| matrix.row(r).all(|(_, v)| v == 0.0)) {
        return Err(Error::Consistency(format!("row {r} is empty after constraint elimination")));
    }
    Ok(ConstrainedSystem {
        layout: sys.layout,
        matrix,
        rhs,
    })
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub b: Vec<f64>,
    pub lambda: f64,
    /// `||A x - b|| / ||b||` on the constrained system (absolute if `b = 0`).
    pub residual: f64,
    pub nnz: usize,
}

impl Solution {
    /// Plain-text dump with one header line per block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, block) in [("u", &self.u), ("p", &self.p), ("B", &self.b)] {
            let _ = writeln!(out, "{name} {}", block.len());
            for v in block.iter() {
                let _ = writeln!(out, "{v:.17e}");
            }
        }
        let _ = writeln!(out, "lambda 1\n{:.17e}", self.lambda);
        out
    }
}

/// Sparse LU solve of the constrained system.
pub fn solve(sys: &ConstrainedSystem) -> Result<Solution> {
    let x = sys.matrix.lu()?.solve(&sys.rhs)?;
    let ax = sys.matrix.matvec(&x);
    let res: Vec<f64> = ax.iter().zip(&sys.rhs).map(|(a, b)| a - b).collect();
    let bn = norm2(&sys.rhs);
    let residual = norm2(&res) / if bn > 0.0 { bn } else { 1.0 };
    let l = sys.layout;
    Ok(Solution {
        u: x[..l.n_u].to_vec(),
        p: x[l.p0()..l.b0()].to_vec(),
        b: x[l.b0()..l.lambda()].to_vec(),
        lambda: x[l.lambda()],
        residual,
        nnz: sys.matrix.nnz(),
    })
}

/// Maximum over elements of `||div u_h||_{L2(E)}`.
pub fn check_discrete_divergence(vel: &BdmSpace, coeffs: &[f64]) -> Result<f64> {
    let rule = tet_rule(2 * vel.degree())?;
    let mut ev = BasisEval::default();
    let mut worst: f64 = 0.0;
    for t in 0..vel.mesh().num_tets() {
        let g = vel.geometry(t);
        let dofs = vel.local_dofs(t);
        let mut acc = 0.0;
        for (p, w) in rule.iter() {
            vel.eval(t, &Vec3::from(*p), &mut ev);
            let d: f64 = dofs.iter().zip(&ev.grads).map(|(&i, g)| coeffs[i] * g.trace()).sum();
            acc += w * g.det.abs() * d * d;
        }
        worst = worst.max(acc.sqrt());
    }
    Ok(worst)
}

/// Euclidean projection of a coefficient vector onto the discretely
/// divergence-free fields with zero boundary normal trace, through the
/// saddle-point system `[I B^T 0; B 0 m; 0 m^T 0]`.
pub fn project_to_kernel(vel: &BdmSpace, pres: &PressureSpace, w: &[f64]) -> Result<Vec<f64>> {
    let layout = BlockLayout::new(vel.num_dofs(), pres.num_dofs(), 0);
    let n = layout.size();
    let bdiv = forms::assemble_divergence(vel, pres, Execution::Serial)?;
    let mut t = Triplets::new(n, n);
    for i in 0..layout.n_u {
        t.push(i, i, 1.0);
    }
    t.add_block_transposed(&bdiv, 0, layout.p0(), 1.0);
    t.add_block(&bdiv, layout.p0(), 0, 1.0);
    for (i, m) in pres.mean_functional().into_iter().enumerate() {
        t.push(layout.p0() + i, layout.lambda(), m);
        t.push(layout.lambda(), layout.p0() + i, m);
    }
    let mut rhs = vec![0.0; n];
    rhs[..layout.n_u].copy_from_slice(w);
    let sys = BlockSystem {
        layout,
        matrix: t.to_csr(),
        rhs,
        constraints: vel.boundary_dofs().into_iter().map(|(d, _, _)| (d, 0.0)).collect(),
    };
    Ok(solve(&apply_constraints(&sys)?)?.u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spaces(n: usize, k: usize) -> Spaces {
        Spaces::new(Arc::new(TetMesh::structured_cube(n).unwrap()), k).unwrap()
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let s = spaces(1, 1);
        let sys = assemble_system(
            &s,
            &PhysicalParams::with_nu(1.0),
            &StabParams::defaults(1),
            &AdvectionFields::zero(),
            &ProblemData::homogeneous(),
            Execution::Serial,
        )
        .unwrap();
        assert_eq!(sys.matrix.nrows, s.layout().size());
        let sol = solve(&apply_constraints(&sys).unwrap()).unwrap();
        assert!(sol.u.iter().chain(&sol.p).chain(&sol.b).all(|v| *v == 0.0));
        assert_eq!(check_discrete_divergence(&s.vel, &sol.u).unwrap(), 0.0);
    }

    #[test]
    fn constraining_everything_gives_identity() {
        let layout = BlockLayout::new(2, 1, 0);
        let mut t = Triplets::new(4, 4);
        for i in 0..4 {
            t.push(i, (i + 1) % 4, 2.0);
        }
        let sys = BlockSystem {
            layout,
            matrix: t.to_csr(),
            rhs: vec![1.0; 4],
            constraints: (0..4).map(|d| (d, d as f64)).collect(),
        };
        let c = apply_constraints(&sys).unwrap();
        for r in 0..4 {
            assert_eq!(c.matrix.row(r).collect::<Vec<_>>(), vec![(r, 1.0)]);
        }
        let sol = solve(&c).unwrap();
        assert_eq!(sol.u, vec![0.0, 1.0]);
        assert_eq!(sol.lambda, 3.0);
    }

    #[test]
    fn kernel_projection_is_divergence_free() {
        let s = spaces(2, 1);
        let w: Vec<f64> = (0..s.vel.num_dofs()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let v = project_to_kernel(&s.vel, &s.pres, &w).unwrap();
        let scale = norm2(&v);
        assert!(scale > 1.0);
        assert!(check_discrete_divergence(&s.vel, &v).unwrap() < 1e-12 * scale);
        assert!(check_discrete_divergence(&s.vel, &w).unwrap() > 1e-3);
        for (d, _, _) in s.vel.boundary_dofs() {
            assert!(v[d].abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn block_size_mismatch_is_reported() {
        let s = spaces(1, 1);
        let blocks = assemble_forms(&s, &StabParams::defaults(1), &AdvectionFields::zero(), Execution::Serial).unwrap();
        let bad = BlockLayout::new(s.vel.num_dofs() + 1, s.pres.num_dofs(), s.mag.num_dofs());
        let err = block_matrix(bad, &blocks, &s.pres.mean_functional(), &PhysicalParams::with_nu(1.0));
        assert!(matches!(err, Err(Error::Consistency(_))));
    }
}
