//! `mhd`: manufactured-solution experiments for the stabilized MHD solver.
//!
//! Exit codes: 0 success, 2 configuration or mesh input, 3 solver,
//! 4 gate failure, 5 I/O.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use mhd_core::experiment::{self, advection_fields, ExperimentReport, RunConfig};
use mhd_core::system::{self, apply_constraints, assemble_system, ProblemData};
use mhd_core::{Error, Spaces};

#[derive(Parser)]
#[command(name = "mhd", version, about = "Stabilized finite elements for linearized MHD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Exit with status 4 when a quantitative check fails.
    #[arg(long)]
    gate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One solve per configured mesh.
    Run {
        #[command(flatten)]
        common: Common,
        /// Coordinate dump of the constrained matrix of the first mesh.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// Coefficient dump of the solution on the first mesh.
        #[arg(long)]
        dump_solution: Option<PathBuf>,
    },
    /// Mesh sequence with observed convergence rates.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Viscosity sweep on the first configured mesh.
    SweepNu {
        #[command(flatten)]
        common: Common,
    },
    /// Paired mfStab and fStab runs.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Core(Error),
    Gate(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Gate(_) => 4,
            Failure::Core(e) => match e {
                Error::Io(_) => 5,
                Error::Config { .. }
                | Error::Parse { .. }
                | Error::UnsupportedFormat(_)
                | Error::NonConforming { .. }
                | Error::DegenerateElement(_)
                | Error::UnsupportedDegree { .. }
                | Error::UnsupportedOrder(_)
                | Error::UnsupportedGeometry(_) => 2,
                _ => 3,
            },
        }
    }

    fn line(&self) -> String {
        let kind = match self.code() {
            2 => "config",
            3 => "solver",
            4 => "gate",
            _ => "io",
        };
        let msg = match self {
            Failure::Core(Error::Config { field, msg }) => format!("field={field} {msg}"),
            Failure::Core(e) => e.to_string(),
            Failure::Gate(names) => format!("failed checks: {}", names.join("; ")),
        };
        format!("mhd: error[{kind}]: {}", msg.replace('\n', " "))
    }
}

fn dump_first(cfg: &RunConfig, matrix: Option<&PathBuf>, solution: Option<&PathBuf>) -> Result<(), Error> {
    let mesh = Arc::new(cfg.meshes[0].load()?);
    let spaces = Spaces::new(mesh, cfg.degree)?;
    let fields = advection_fields(cfg, &spaces)?;
    let exact = cfg.manufactured(cfg.params);
    let sys = assemble_system(
        &spaces,
        &cfg.params,
        &cfg.stab,
        &fields,
        &ProblemData::manufactured(&exact),
        cfg.execution,
    )?;
    let constrained = apply_constraints(&sys)?;
    if let Some(p) = matrix {
        std::fs::write(p, constrained.matrix.to_coordinate_text())?;
    }
    if let Some(p) = solution {
        std::fs::write(p, system::solve(&constrained)?.to_text())?;
    }
    Ok(())
}

fn emit(report: &ExperimentReport, cfg: &RunConfig) -> Result<(), Error> {
    match &cfg.output {
        Some(path) => {
            report.write(path)?;
            for g in &report.gates {
                println!("{g}");
            }
        }
        None => {
            print!("{}", report.csv());
            if let Some(t) = &report.rates {
                eprint!("{}", experiment::rates_csv(t));
            }
            for g in &report.gates {
                eprintln!("{g}");
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, report, cfg) = match &cli.command {
        Command::Run {
            common,
            dump_matrix,
            dump_solution,
        } => {
            let cfg = RunConfig::from_file(&common.config)?;
            if dump_matrix.is_some() || dump_solution.is_some() {
                dump_first(&cfg, dump_matrix.as_ref(), dump_solution.as_ref())?;
            }
            (common, experiment::run_single(&cfg)?, cfg)
        }
        Command::Convergence { common } => {
            let cfg = RunConfig::from_file(&common.config)?;
            (common, experiment::run_convergence(&cfg)?, cfg)
        }
        Command::SweepNu { common } => {
            let cfg = RunConfig::from_file(&common.config)?;
            (common, experiment::run_nu_sweep(&cfg)?, cfg)
        }
        Command::Compare { common } => {
            let cfg = RunConfig::from_file(&common.config)?;
            (common, experiment::run_comparison(&cfg)?, cfg)
        }
    };
    emit(&report, &cfg)?;
    if common.gate && !report.gates_pass() {
        let failed = report.gates.iter().filter(|g| !g.pass).map(|g| g.name.clone()).collect();
        return Err(Failure::Gate(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.code())
        }
    }
}
