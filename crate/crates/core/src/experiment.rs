//! Run configuration, manufactured-solution experiments and CSV output.
//!
//! A configuration is a flat `key = value` file; `#` starts a comment.
//! Mesh keys may repeat to build a mesh sequence:
//!
//! ```text
//! degree = 1
//! mesh.structured_n = 2
//! mesh.structured_n = 4
//! nu_s = 1e-10
//! nu_m = 1e-10
//! scheme = mfStab
//! output = conv.csv
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::analysis::{
    compute_errors, convergence_rates, regime_diagnostics, velocity_parts, ErrorReport, NormDegrees, RateTable,
    RegimeDiagnostics,
};
use crate::error::{Error, Result};
use crate::forms::{AdvectionField, AdvectionFields, FormVariant, PhysicalParams, Scheme, StabParams, LOAD_DEGREE};
use crate::mesh::{MeshMetrics, TetMesh};
use crate::mms::{self, Binding, Manufactured};
use crate::system::{self, apply_constraints, assemble_system, check_discrete_divergence, ProblemData, Solution, Spaces};
use crate::Execution;

/// Column header of every result table.
pub const CSV_HEADER: &str = "mesh_id,h_max,h_min,h_mean,ndof_u,ndof_p,ndof_B,nu_s,nu_m,scheme,err_u_L2,err_u_H1,err_u_S,err_u_upw,err_u_cip,err_u_stab,err_p_L2,err_B_L2,err_B_H1,err_B_M,lambda_S,lambda_M,residual,t_assemble_s,t_solve_s";

/// Default viscosity list of a sweep.
pub const DEFAULT_NU_SWEEP: [f64; 6] = [1e-1, 1e-3, 1e-5, 1e-7, 1e-9, 1e-11];

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Structured(usize),
    Tetgen { node: PathBuf, ele: PathBuf },
}

impl MeshSource {
    pub fn id(&self) -> String {
        match self {
            MeshSource::Structured(n) => format!("cube{n}"),
            MeshSource::Tetgen { node, .. } => node
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| node.display().to_string()),
        }
    }

    pub fn load(&self) -> Result<TetMesh> {
        match self {
            MeshSource::Structured(n) => TetMesh::structured_cube(*n),
            MeshSource::Tetgen { node, ele } => {
                TetMesh::load_tetgen(&std::fs::read_to_string(node)?, &std::fs::read_to_string(ele)?)
            }
        }
    }
}

/// How the discrete `chi` is built from `chi = u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChiInterp {
    /// BDM interpolant: divergence free with zero normal trace.
    Bdm,
    /// The analytic field itself.
    Exact,
}

/// Which quantitative check `--gate` applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    /// Chosen from the subcommand and the viscosities.
    Auto,
    Diffusive,
    Convective,
    Sweep,
    Compare,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub degree: usize,
    pub meshes: Vec<MeshSource>,
    pub params: PhysicalParams,
    pub stab: StabParams,
    pub nu_sweep: Vec<f64>,
    pub gate: GateKind,
    pub output: Option<PathBuf>,
    pub chi: Binding,
    pub theta: Binding,
    pub chi_interp: ChiInterp,
    /// Adds the gradient of a smooth potential to the momentum forcing.
    pub pressure_perturbation: bool,
    /// Zero timing columns keep serial output bitwise reproducible.
    pub record_timings: bool,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            degree: 1,
            meshes: Vec::new(),
            params: PhysicalParams::with_nu(1.0),
            stab: StabParams::defaults(1),
            nu_sweep: DEFAULT_NU_SWEEP.to_vec(),
            gate: GateKind::Auto,
            output: None,
            chi: Binding::Exact,
            theta: Binding::Exact,
            chi_interp: ChiInterp::Bdm,
            pressure_perturbation: false,
            record_timings: false,
            execution: Execution::Serial,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_binding(key: &str, v: &str) -> Result<Binding> {
    match v.to_ascii_lowercase().as_str() {
        "exact" | "u" | "b" => Ok(Binding::Exact),
        "zero" | "0" => Ok(Binding::Zero),
        _ => Err(Error::config(key, format!("expected exact or zero, got `{v}`"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut mu_a = None;
        let mut nodes = Vec::new();
        let mut eles = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected key = value, got `{line}`"),
                });
            };
            let (key, v) = (key.trim(), value.trim());
            match key {
                "degree" => cfg.degree = parse_num(key, v)?,
                "mesh.structured_n" => {
                    let n: usize = parse_num(key, v)?;
                    if n == 0 {
                        return Err(Error::config(key, "must be positive"));
                    }
                    cfg.meshes.push(MeshSource::Structured(n));
                }
                "mesh.node_file" => {
                    nodes.push((cfg.meshes.len(), PathBuf::from(v)));
                    cfg.meshes.push(MeshSource::Structured(0));
                }
                "mesh.ele_file" => eles.push(PathBuf::from(v)),
                "nu_s" => cfg.params.nu_s = parse_num(key, v)?,
                "nu_m" => cfg.params.nu_m = parse_num(key, v)?,
                "sigma_s" => cfg.params.sigma_s = parse_num(key, v)?,
                "sigma_m" => cfg.params.sigma_m = parse_num(key, v)?,
                "mu_a" => mu_a = Some(parse_num(key, v)?),
                "mu_c" => cfg.stab.mu_c = parse_num(key, v)?,
                "mu_j1" => cfg.stab.mu_j1 = parse_num(key, v)?,
                "mu_j2" => cfg.stab.mu_j2 = parse_num(key, v)?,
                "scheme" => cfg.stab.scheme = v.parse::<Scheme>()?,
                "forms" => cfg.stab.variant = v.parse::<FormVariant>()?,
                "nu_sweep" => {
                    cfg.nu_sweep = v
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_num(key, s))
                        .collect::<Result<_>>()?;
                }
                "gate" => {
                    cfg.gate = match v.to_ascii_lowercase().as_str() {
                        "auto" => GateKind::Auto,
                        "diffusive" => GateKind::Diffusive,
                        "convective" => GateKind::Convective,
                        "sweep" => GateKind::Sweep,
                        "compare" => GateKind::Compare,
                        _ => return Err(Error::config(key, format!("unknown gate `{v}`"))),
                    }
                }
                "output" => cfg.output = Some(PathBuf::from(v)),
                "chi" => cfg.chi = parse_binding(key, v)?,
                "theta" => cfg.theta = parse_binding(key, v)?,
                "chi_interp" => {
                    cfg.chi_interp = match v.to_ascii_lowercase().as_str() {
                        "bdm" => ChiInterp::Bdm,
                        "exact" => ChiInterp::Exact,
                        _ => return Err(Error::config(key, format!("expected bdm or exact, got `{v}`"))),
                    }
                }
                "pressure_perturbation" => cfg.pressure_perturbation = parse_bool(key, v)?,
                "record_timings" => cfg.record_timings = parse_bool(key, v)?,
                "parallel" => {
                    cfg.execution = if parse_bool(key, v)? {
                        Execution::Parallel
                    } else {
                        Execution::Serial
                    }
                }
                _ => return Err(Error::config(key, "unknown key")),
            }
        }
        if nodes.len() != eles.len() {
            return Err(Error::config(
                "mesh.ele_file",
                format!("{} node files but {} element files", nodes.len(), eles.len()),
            ));
        }
        for ((slot, node), ele) in nodes.into_iter().zip(eles) {
            cfg.meshes[slot] = MeshSource::Tetgen { node, ele };
        }
        if !(1..=2).contains(&cfg.degree) {
            return Err(Error::config("degree", format!("must be 1 or 2, got {}", cfg.degree)));
        }
        let defaults = StabParams::defaults(cfg.degree);
        cfg.stab.mu_a = mu_a.unwrap_or(defaults.mu_a);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.degree) {
            return Err(Error::config("degree", format!("must be 1 or 2, got {}", self.degree)));
        }
        if self.meshes.is_empty() {
            return Err(Error::config("mesh", "at least one mesh is required"));
        }
        self.params.validate()?;
        self.stab.validate()?;
        if self.nu_sweep.iter().any(|nu| !(*nu > 0.0 && nu.is_finite())) {
            return Err(Error::config("nu_sweep", "viscosities must be positive"));
        }
        Ok(())
    }

    /// Manufactured solution bound to this configuration.
    pub fn manufactured(&self, params: PhysicalParams) -> Manufactured {
        Manufactured {
            params,
            chi: self.chi,
            theta: self.theta,
            gradient_perturbation: self.pressure_perturbation,
        }
    }
}

/// Discrete advection fields for the manufactured problem on `spaces`.
pub fn advection_fields(cfg: &RunConfig, spaces: &Spaces) -> Result<AdvectionFields> {
    let chi = match (cfg.chi, cfg.chi_interp) {
        (Binding::Zero, _) => AdvectionField::Zero,
        (Binding::Exact, ChiInterp::Exact) => AdvectionField::analytic(mms::velocity),
        (Binding::Exact, ChiInterp::Bdm) => {
            AdvectionField::Bdm(Arc::new(spaces.vel.interpolate(&mms::velocity, LOAD_DEGREE)?))
        }
    };
    let theta = match cfg.theta {
        Binding::Zero => AdvectionField::Zero,
        Binding::Exact => AdvectionField::analytic(mms::magnetic),
    };
    Ok(AdvectionFields { chi, theta })
}

/// One solved manufactured run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub mesh_id: String,
    pub metrics: MeshMetrics,
    pub ndof_u: usize,
    pub ndof_p: usize,
    pub ndof_b: usize,
    pub nu_s: f64,
    pub nu_m: f64,
    pub scheme: Scheme,
    pub errors: ErrorReport,
    pub regime: RegimeDiagnostics,
    pub residual: f64,
    pub t_assemble: f64,
    pub t_solve: f64,
    /// `max_E ||div u_h||_{L2(E)}`.
    pub div_max: f64,
    /// `||u_h||_{1,h}`.
    pub u_h_norm_1h: f64,
    /// `(p_h, 1)`.
    pub pressure_mean: f64,
}

impl RunRecord {
    pub fn csv_row(&self) -> String {
        let e = &self.errors;
        let mut s = format!(
            "{},{:.12e},{:.12e},{:.12e},{},{},{},{:.6e},{:.6e},{}",
            self.mesh_id,
            self.metrics.h_max,
            self.metrics.h_min,
            self.metrics.h_mean,
            self.ndof_u,
            self.ndof_p,
            self.ndof_b,
            self.nu_s,
            self.nu_m,
            self.scheme
        );
        for v in [
            e.u_l2, e.u_h1, e.u_s, e.u_upw, e.u_cip, e.u_stab, e.p_l2, e.b_l2, e.b_h1, e.b_m,
            self.regime.lambda_s, self.regime.lambda_m, self.residual,
        ] {
            let _ = write!(s, ",{v:.12e}");
        }
        let _ = write!(s, ",{:.6e},{:.6e}", self.t_assemble, self.t_solve);
        s
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub solution: Solution,
}

/// Assembles, solves and measures one manufactured run.
pub fn solve_case(
    cfg: &RunConfig,
    mesh: &MeshSource,
    params: PhysicalParams,
    scheme: Scheme,
) -> Result<RunOutcome> {
    let exec = cfg.execution;
    let stab = StabParams { scheme, ..cfg.stab };
    let t0 = Instant::now();
    let mesh_arc = Arc::new(mesh.load()?);
    let metrics = mesh_arc.metrics()?;
    let spaces = Spaces::new(mesh_arc, cfg.degree)?;
    let fields = advection_fields(cfg, &spaces)?;
    let exact = cfg.manufactured(params);
    let data = ProblemData::manufactured(&exact);
    let sys = assemble_system(&spaces, &params, &stab, &fields, &data, exec)?;
    let constrained = apply_constraints(&sys)?;
    let t1 = Instant::now();
    let solution = system::solve(&constrained)?;
    let t2 = Instant::now();
    let errors = compute_errors(&spaces, &solution, &exact, &params, &stab, &fields, exec)?;
    let regime = regime_diagnostics(&spaces.vel, &params, &stab, &fields)?;
    let own = velocity_parts(
        &spaces.vel,
        &solution.u,
        None,
        &fields,
        &stab,
        NormDegrees::forms(cfg.degree),
        exec,
    )?;
    let u_h_norm_1h = (own.mass + own.eps + stab.mu_a * own.jump).sqrt();
    let pressure_mean = spaces
        .pres
        .mean_functional()
        .iter()
        .zip(&solution.p)
        .map(|(m, p)| m * p)
        .sum();
    let (t_assemble, t_solve) = if cfg.record_timings {
        ((t1 - t0).as_secs_f64(), (t2 - t1).as_secs_f64())
    } else {
        (0.0, 0.0)
    };
    let layout = spaces.layout();
    Ok(RunOutcome {
        record: RunRecord {
            mesh_id: mesh.id(),
            metrics,
            ndof_u: layout.n_u,
            ndof_p: layout.n_p,
            ndof_b: layout.n_b,
            nu_s: params.nu_s,
            nu_m: params.nu_m,
            scheme,
            errors,
            regime,
            residual: solution.residual,
            t_assemble,
            t_solve,
            div_max: check_discrete_divergence(&spaces.vel, &solution.u)?,
            u_h_norm_1h,
            pressure_mean,
        },
        solution,
    })
}

/// One evaluated acceptance check.
#[derive(Clone, Debug, PartialEq)]
pub struct GateCheck {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl GateCheck {
    fn at_least(name: &str, value: f64, lo: f64) -> Self {
        GateCheck {
            name: name.into(),
            value,
            bound: format!(">= {}", num(lo)),
            pass: value >= lo,
        }
    }

    fn at_most(name: &str, value: f64, hi: f64) -> Self {
        GateCheck {
            name: name.into(),
            value,
            bound: format!("<= {}", num(hi)),
            pass: value <= hi,
        }
    }

    fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        GateCheck {
            name: name.into(),
            value,
            bound: format!("in [{}, {}]", num(lo), num(hi)),
            pass: (lo..=hi).contains(&value),
        }
    }
}

impl std::fmt::Display for GateCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} = {} ({})", self.name, num(self.value), self.bound)
    }
}

fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.6}")
    }
}

/// Result of a driver: CSV rows plus derived tables and gate checks.
#[derive(Clone, Debug, Default)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    pub rates: Option<RateTable>,
    /// Header line and rows of the ratio table, if any.
    pub ratios: Option<(String, Vec<String>)>,
    pub gates: Vec<GateCheck>,
}

impl ExperimentReport {
    pub fn csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn gates_pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    /// Writes the main table and, where present, `<stem>_rates.csv` and
    /// `<stem>_ratios.csv` next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.csv())?;
        if let Some(t) = &self.rates {
            std::fs::write(sibling(path, "rates"), rates_csv(t))?;
        }
        if let Some((header, rows)) = &self.ratios {
            let mut s = format!("{header}\n");
            for r in rows {
                s.push_str(r);
                s.push('\n');
            }
            std::fs::write(sibling(path, "ratios"), s)?;
        }
        Ok(())
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Rates table: one row per series with pairwise rates and the slope.
pub fn rates_csv(t: &RateTable) -> String {
    let mut s = String::from("norm");
    for l in 1..t.h.len() {
        let _ = write!(s, ",rate_{}_{}", l - 1, l);
    }
    s.push_str(",slope\n");
    for (i, name) in t.names.iter().enumerate() {
        s.push_str(name);
        for r in &t.pairwise[i] {
            let _ = write!(s, ",{r:.6}");
        }
        let _ = writeln!(s, ",{:.6}", t.slopes[i]);
    }
    s
}

/// Rate table over every error column of a record sequence.
pub fn rate_table(records: &[RunRecord]) -> Result<RateTable> {
    let h: Vec<f64> = records.iter().map(|r| r.metrics.h_max).collect();
    let names = records
        .first()
        .map(|r| r.errors.named().map(|(n, _)| n))
        .unwrap_or_default();
    let series: Vec<(String, Vec<f64>)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), records.iter().map(|r| r.errors.named()[i].1).collect()))
        .collect();
    convergence_rates(&h, &series)
}

/// Mass-conservation and pressure-mean checks applied to every run.
fn structural_checks(records: &[RunRecord]) -> Vec<GateCheck> {
    let div = records
        .iter()
        .map(|r| r.div_max / r.u_h_norm_1h.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    vec![GateCheck::at_most("max div u_h / ||u_h||_1h", div, 1e-9)]
}

/// Bounds of the convergence gates for degree `k`.
pub fn convergence_gates(k: usize, kind: GateKind, rates: &RateTable) -> Vec<GateCheck> {
    let kf = k as f64;
    let slope = |n: &str| rates.slope(n).unwrap_or(f64::NAN);
    match kind {
        // pre-asymptotic coarse levels are excluded: the finest pair is gated
        GateKind::Convective => {
            let lo = if k == 1 { 1.3 } else { 2.2 };
            let finest = rates.finest("err_u_stab").unwrap_or(f64::NAN);
            vec![GateCheck::at_least("finest-pair rate err_u_stab", finest, lo)]
        }
        _ => vec![
            GateCheck::within("rate err_u_stab", slope("err_u_stab"), kf - 0.25, kf + 0.35),
            GateCheck::within("rate err_B_H1", slope("err_B_H1"), kf - 0.25, kf + 0.35),
            GateCheck::at_least("rate err_p_L2", slope("err_p_L2"), kf - 0.25),
        ],
    }
}

/// Runs every configured mesh once.
pub fn run_single(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut records = Vec::new();
    for m in &cfg.meshes {
        records.push(solve_case(cfg, m, cfg.params, cfg.stab.scheme)?.record);
    }
    let gates = structural_checks(&records);
    Ok(ExperimentReport {
        records,
        gates,
        ..Default::default()
    })
}

/// Mesh sequence with rates; the gate regime follows the viscosities
/// unless fixed in the configuration.
pub fn run_convergence(cfg: &RunConfig) -> Result<ExperimentReport> {
    if cfg.meshes.len() < 2 {
        return Err(Error::config("mesh", "a convergence study needs at least two meshes"));
    }
    let mut report = run_single(cfg)?;
    report
        .records
        .sort_by(|a, b| b.metrics.h_max.total_cmp(&a.metrics.h_max));
    let rates = rate_table(&report.records)?;
    let kind = match cfg.gate {
        GateKind::Auto if cfg.params.nu_s.min(cfg.params.nu_m) >= 1e-2 => GateKind::Diffusive,
        GateKind::Auto => GateKind::Convective,
        k => k,
    };
    report.gates.extend(convergence_gates(cfg.degree, kind, &rates));
    report.rates = Some(rates);
    Ok(report)
}

/// Sweep of `nu_S = nu_M = nu` on the first configured mesh.
pub fn run_nu_sweep(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mesh = &cfg.meshes[0];
    let mut records = Vec::new();
    for &nu in &cfg.nu_sweep {
        let params = PhysicalParams {
            nu_s: nu,
            nu_m: nu,
            ..cfg.params
        };
        records.push(solve_case(cfg, mesh, params, cfg.stab.scheme)?.record);
    }
    let mut gates = structural_checks(&records);
    for name in ["err_u_H1", "err_B_H1", "err_p_L2"] {
        gates.push(GateCheck::at_most(&format!("max/min {name}"), spread(&records, name), 2.0));
    }
    Ok(ExperimentReport {
        records,
        gates,
        ..Default::default()
    })
}

fn error_named(r: &RunRecord, name: &str) -> f64 {
    r.errors
        .named()
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
        .unwrap_or(f64::NAN)
}

/// `max / min` of one error column.
pub fn spread(records: &[RunRecord], name: &str) -> f64 {
    let vals: Vec<f64> = records.iter().map(|r| error_named(r, name)).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Columns of the ratio table, each `fStab / mfStab`.
pub const RATIO_COLUMNS: [&str; 4] = ["err_u_H1", "err_u_L2", "err_B_H1", "err_p_L2"];

/// Paired mfStab and fStab runs on every mesh.
pub fn run_comparison(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for m in &cfg.meshes {
        let a = solve_case(cfg, m, cfg.params, Scheme::MfStab)?.record;
        let b = solve_case(cfg, m, cfg.params, Scheme::FStab)?.record;
        let mut row = format!("{},{:.12e}", a.mesh_id, a.metrics.h_max);
        for name in RATIO_COLUMNS {
            let _ = write!(row, ",{:.6e}", error_named(&b, name) / error_named(&a, name));
        }
        rows.push(row);
        pairs.push((a.clone(), b.clone()));
        records.push(a);
        records.push(b);
    }
    let mut gates = structural_checks(&records);
    pairs.sort_by(|x, y| y.0.metrics.h_max.total_cmp(&x.0.metrics.h_max));
    let (fine_a, fine_b) = pairs.last().expect("at least one mesh");
    gates.push(GateCheck::at_least(
        "fStab/mfStab err_u_H1 (finest)",
        error_named(fine_b, "err_u_H1") / error_named(fine_a, "err_u_H1"),
        1.5,
    ));
    for name in ["err_B_H1", "err_p_L2"] {
        let r = error_named(fine_b, name) / error_named(fine_a, name);
        gates.push(GateCheck::at_most(&format!("|fStab/mfStab {name} - 1|"), (r - 1.0).abs(), 0.1));
    }
    let mut rates = None;
    if pairs.len() >= 2 {
        let mf: Vec<RunRecord> = pairs.iter().map(|p| p.0.clone()).collect();
        let t = rate_table(&mf)?;
        gates.push(GateCheck::at_least(
            "mfStab rate err_u_H1",
            t.slope("err_u_H1").unwrap_or(f64::NAN),
            0.9,
        ));
        rates = Some(t);
    }
    let mut header = String::from("mesh_id,h_max");
    for name in RATIO_COLUMNS {
        let _ = write!(header, ",ratio_{name}");
    }
    Ok(ExperimentReport {
        records,
        rates,
        ratios: Some((header, rows)),
        gates,
    })
}
