//! `cstokes`: run, study and verify the compressible Stokes solver.

mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use cstokes::analysis::{convergence_study, AnalysisError, DiagnosticsRecord};
use cstokes::config::{Config, ConfigError};
use cstokes::scheme::{advance, setup, SchemeError};
use cstokes::spaces::SpaceError;

use output::{write_vtk, ConvergenceCsvRow, CsvOut, DiagnosticsRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0} invariant check(s) failed")]
    Verification(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cstokes",
    version,
    about = "Compressible Stokes solver: mixed FEM velocity, upwind DG density"
)]
struct Cli {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for randomized checks; recorded in CSV headers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run to the final time, writing diagnostics.csv and fields_XXXX.vtk.
    Run {
        config: PathBuf,
        /// Write a VTK file every this many steps (0 disables VTK output).
        #[arg(long, default_value_t = 1)]
        vtk_every: usize,
    },
    /// Self-convergence study over refined meshes, writing convergence.csv.
    Study {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run and check every invariant; exits nonzero if any fails.
    Verify { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Run { config, vtk_every } => {
            cmd_run(&Config::read(config)?, &cli.out_dir, cli.seed, *vtk_every)
        }
        Command::Study { config, levels } => {
            cmd_study(&Config::read(config)?, &cli.out_dir, cli.seed, *levels)
        }
        Command::Verify { config } => cmd_verify(&Config::read(config)?, cli.seed),
    }
}

fn vtk_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("fields_{step:04}.vtk"))
}

fn cmd_run(config: &Config, out_dir: &Path, seed: u64, vtk_every: usize) -> Result<(), CliError> {
    let (scheme, initial, grid) = setup(config)?;
    let mut csv = CsvOut::create(&out_dir.join("diagnostics.csv"), seed)?;
    let wants_vtk = |step: usize| vtk_every > 0 && step.is_multiple_of(vtk_every);

    let record = DiagnosticsRecord::new(&scheme, None, &initial)?;
    csv.write(&DiagnosticsRow::new(&record, None))?;
    if wants_vtk(0) {
        write_vtk(&vtk_path(out_dir, 0), &initial, scheme.physics())?;
    }
    let traj = advance(scheme, initial, grid, &mut |scheme, prev, next, report| {
        let record = DiagnosticsRecord::new(scheme, Some(prev), next)?;
        csv.write(&DiagnosticsRow::new(&record, Some(report)))?;
        if wants_vtk(next.step) {
            write_vtk(&vtk_path(out_dir, next.step), next, scheme.physics())?;
        }
        println!(
            "step {:>5}  t = {:.6e}  E = {:.10e}  picard = {}",
            next.step, next.time, record.energy, report.picard_iterations
        );
        Ok::<_, CliError>(())
    })?;
    println!(
        "wrote {} steps to {}",
        traj.reports.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_study(config: &Config, out_dir: &Path, seed: u64, levels: usize) -> Result<(), CliError> {
    let rows = convergence_study(config, levels)?;
    let mut csv = CsvOut::create(&out_dir.join("convergence.csv"), seed)?;
    for row in &rows {
        csv.write(&ConvergenceCsvRow::from(row))?;
        println!(
            "level {}  elements {:>7}  h = {:.4e}  |u - u_ref| = {:.4e}  |rho - rho_ref| = {:.4e}  rates = {} / {}",
            row.level,
            row.elements,
            row.h,
            row.u_error,
            row.rho_error,
            row.u_rate.map_or("-".to_string(), |r| format!("{r:.3}")),
            row.rho_rate.map_or("-".to_string(), |r| format!("{r:.3}")),
        );
    }
    Ok(())
}

fn cmd_verify(config: &Config, seed: u64) -> Result<(), CliError> {
    let checks = verify::verify(config, seed)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
