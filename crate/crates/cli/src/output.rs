//! CSV and legacy VTK writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use cstokes::analysis::{effective_viscous_flux, ConvergenceRow, DiagnosticsRecord};
use cstokes::config::Physics;
use cstokes::scheme::{State, StepReport};

use crate::CliError;

/// One line of `diagnostics.csv`. Step-report columns are empty for the
/// initial state.
#[derive(Debug, Serialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub pressure_energy: f64,
    pub jump_dissipation: f64,
    pub viscous_dissipation: f64,
    pub energy_defect: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub p_eff_l2: f64,
    pub rho_gamma1: f64,
    pub picard_iterations: Option<usize>,
    pub continuity_residual: Option<f64>,
    pub momentum_residual: Option<f64>,
    pub vorticity_residual: Option<f64>,
    pub positivity_bound: Option<f64>,
}

impl DiagnosticsRow {
    pub fn new(record: &DiagnosticsRecord, report: Option<&StepReport>) -> Self {
        Self {
            step: record.step,
            time: record.time,
            mass: record.mass,
            energy: record.energy,
            kinetic: record.kinetic,
            pressure_energy: record.pressure_energy,
            jump_dissipation: record.jump_dissipation,
            viscous_dissipation: record.viscous_dissipation,
            energy_defect: record.energy_defect,
            rho_min: record.rho_min,
            rho_max: record.rho_max,
            p_eff_l2: record.p_eff_l2,
            rho_gamma1: record.rho_gamma1,
            picard_iterations: report.map(|r| r.picard_iterations),
            continuity_residual: report.map(|r| r.continuity_residual),
            momentum_residual: report.map(|r| r.momentum_residual),
            vorticity_residual: report.map(|r| r.vorticity_residual),
            positivity_bound: report.map(|r| r.positivity_bound),
        }
    }
}

/// One line of `convergence.csv`.
#[derive(Debug, Serialize)]
pub struct ConvergenceCsvRow {
    pub level: usize,
    pub elements: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub u_error: f64,
    pub rho_error: f64,
    pub u_rate: Option<f64>,
    pub rho_rate: Option<f64>,
    pub weak_residual: f64,
}

impl From<&ConvergenceRow> for ConvergenceCsvRow {
    fn from(r: &ConvergenceRow) -> Self {
        Self {
            level: r.level,
            elements: r.elements,
            h: r.h,
            dt: r.dt,
            steps: r.steps,
            u_error: r.u_error,
            rho_error: r.rho_error,
            u_rate: r.u_rate,
            rho_rate: r.rho_rate,
            weak_residual: r.weak_residual,
        }
    }
}

/// CSV writer whose first line is a `# seed=N` comment.
pub struct CsvOut {
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, seed: u64) -> Result<Self, CliError> {
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "# seed={seed}")?;
        Ok(Self {
            writer: csv::Writer::from_writer(file),
        })
    }

    pub fn write(&mut self, row: &impl Serialize) -> Result<(), CliError> {
        self.writer.serialize(row)?;
        // keep partial output on disk if a later step fails
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes `state` as a legacy ASCII VTK unstructured grid with cell data
/// `rho`, `div_u`, `p_eff`, `w` (cell average) and the vector `u` at the
/// cell centroid.
pub fn write_vtk(path: &Path, state: &State, physics: &Physics) -> Result<(), CliError> {
    let mesh = state.rho.mesh();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "cstokes step {} time {:e}", state.step, state.time)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_vertices())?;
    for x in mesh.vertices() {
        writeln!(out, "{:e} {:e} 0", x[0], x[1])?;
    }
    let n = mesh.num_elements();
    writeln!(out, "CELLS {} {}", n, 4 * n)?;
    for [a, b, c] in mesh.elements() {
        writeln!(out, "3 {a} {b} {c}")?;
    }
    writeln!(out, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(out, "5")?;
    }

    let div = state.u.divergence()?;
    let p_eff = effective_viscous_flux(&state.rho, &state.u, physics)?;
    let w_avg: Vec<f64> = (0..n)
        .map(|e| {
            let c = mesh.centroid(e);
            state.w.scalar_at(e, c)
        })
        .collect();
    writeln!(out, "CELL_DATA {n}")?;
    for (name, values) in [
        ("rho", state.rho.values()),
        ("div_u", &div[..]),
        ("p_eff", p_eff.values()),
        ("w", &w_avg[..]),
    ] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(out, "{v:e}")?;
        }
    }
    writeln!(out, "VECTORS u double")?;
    for e in 0..n {
        let u = state.u.vector_at(e, mesh.centroid(e));
        writeln!(out, "{:e} {:e} 0", u[0], u[1])?;
    }
    out.flush()?;
    Ok(())
}
