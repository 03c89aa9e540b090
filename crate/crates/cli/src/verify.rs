//! Invariant checks run by `cstokes verify`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cstokes::analysis::{
    hodge_decompose, renormalized_residual, trajectory_records, Renormalization,
};
use cstokes::config::Config;
use cstokes::mesh::{Mesh, Point};
use cstokes::scheme::{advance, setup, Trajectory};
use cstokes::spaces::{commuting_defect, Field};

use crate::CliError;

#[derive(Debug)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// Runs the configuration and evaluates every invariant on its mesh and
/// trajectory.
pub fn verify(config: &Config, seed: u64) -> Result<Vec<Check>, CliError> {
    let (scheme, initial, grid) = setup(config)?;
    let mesh = scheme.mesh().clone();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut checks = vec![
        transport_columns(&scheme, &mut rng)?,
        commuting(&mesh, &mut rng),
        hodge(&scheme, &mut rng)?,
    ];
    let traj = advance(scheme, initial, grid, &mut |_, _, _, _| {
        Ok::<_, CliError>(())
    })?;
    checks.extend(trajectory_checks(&traj)?);
    Ok(checks)
}

fn transport_columns(
    scheme: &cstokes::scheme::Scheme,
    rng: &mut StdRng,
) -> Result<Check, CliError> {
    let v = &scheme.spaces().v;
    let u = Field::new(
        v.clone(),
        (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )?;
    let a = scheme.assemble_transport(&u)?;
    let dt = scheme.dt();
    let worst = a
        .column_sums()
        .iter()
        .zip(scheme.mesh().areas())
        .map(|(c, area)| (c - area / dt).abs())
        .fold(0.0, f64::max);
    Ok(check(
        "transport conservation",
        worst <= 1e-13 * (1.0 / dt).max(1.0),
        format!("max flux column sum {worst:.2e}"),
    ))
}

fn commuting(mesh: &Arc<Mesh>, rng: &mut StdRng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let k = [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
        let amp = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let phase = rng.gen_range(0.0..2.0 * PI);
        let arg = move |x: Point| k[0] * x[0] + k[1] * x[1] + phase;
        let d = commuting_defect(
            mesh,
            |x| [amp[0] * arg(x).sin(), amp[1] * arg(x).sin()],
            |x| (k[0] * amp[0] + k[1] * amp[1]) * arg(x).cos(),
        );
        worst = worst.max(d);
    }
    check(
        "commuting diagram",
        worst <= 1e-9,
        format!("max defect {worst:.2e}"),
    )
}

fn hodge(scheme: &cstokes::scheme::Scheme, rng: &mut StdRng) -> Result<Check, CliError> {
    let spaces = scheme.spaces();
    let mass = scheme.mass_v();
    let (mut ortho, mut div) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let u = Field::new(
            spaces.v.clone(),
            (0..spaces.v.dim())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        )?;
        let norm_sq = mass.bilinear(u.values(), u.values()).max(f64::MIN_POSITIVE);
        let parts = hodge_decompose(spaces, &u)?;
        ortho = ortho.max(
            mass.bilinear(parts.curl_zeta.values(), parts.z.values())
                .abs()
                / norm_sq,
        );
        let (dz, du) = (parts.z.divergence()?, u.divergence()?);
        div = div.max(
            dz.iter()
                .zip(&du)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    Ok(check(
        "hodge decomposition",
        ortho <= 1e-10 && div <= 1e-12,
        format!("orthogonality {ortho:.2e}, divergence {div:.2e}"),
    ))
}

fn trajectory_checks(traj: &Trajectory) -> Result<Vec<Check>, CliError> {
    let records = trajectory_records(traj)?;
    let first = &records[0];
    let e0 = first.energy;
    let rho0 = &traj.states[0].rho;
    let b0: f64 = rho0
        .values()
        .iter()
        .zip(rho0.mesh().areas())
        .map(|(r, a)| a * r * r)
        .sum();

    let mut drift = 0.0f64;
    let mut slack = f64::INFINITY;
    let mut energy = f64::NEG_INFINITY;
    let mut renormalized = 0.0f64;
    for (m, pair) in traj.states.windows(2).enumerate() {
        drift = drift.max((records[m + 1].mass - first.mass).abs() / first.mass);
        let min_new = pair[1]
            .rho
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        slack = slack.min(min_new - traj.reports[m].positivity_bound);
        energy = energy.max(records[m + 1].energy_defect);
        let terms = renormalized_residual(
            &traj.scheme,
            &pair[0].rho,
            &pair[1].rho,
            &pair[1].u,
            Renormalization::Square,
        )?;
        renormalized = renormalized.max(terms.defect());
    }
    let max_of =
        |f: fn(&cstokes::scheme::StepReport) -> f64| traj.reports.iter().map(f).fold(0.0, f64::max);
    let continuity = max_of(|r| r.continuity_residual);
    let momentum = max_of(|r| r.momentum_residual);
    let vorticity = max_of(|r| r.vorticity_residual);
    let steps = traj.reports.len();
    Ok(vec![
        check(
            "mass conservation",
            drift <= 1e-12,
            format!("max relative drift {drift:.2e} over {steps} steps"),
        ),
        check(
            "positivity bound",
            slack >= -1e-12,
            format!("smallest slack {slack:.2e}"),
        ),
        check(
            "energy inequality",
            energy <= 1e-8 * e0,
            format!(
                "max defect {:.2e} E0",
                if steps == 0 { 0.0 } else { energy / e0 }
            ),
        ),
        check(
            "scheme residuals",
            continuity <= 1e-9 && momentum <= 1e-9,
            format!("continuity {continuity:.2e}, momentum {momentum:.2e}"),
        ),
        check(
            "vorticity equation",
            vorticity <= 1e-11,
            format!("max residual {vorticity:.2e}"),
        ),
        check(
            "renormalized identity",
            renormalized <= 1e-9 * b0,
            format!(
                "max defect {:.2e} of the initial integral",
                renormalized / b0
            ),
        ),
    ])
}
