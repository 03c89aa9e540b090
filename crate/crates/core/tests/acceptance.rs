//! Acceptance suite. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};

use cstokes::analysis::{
    convergence_study, hodge_decompose, renormalized_residual, trajectory_records, Renormalization,
};
use cstokes::config::Config;
use cstokes::forms;
use cstokes::mesh::{Mesh, Point};
use cstokes::quadrature;
use cstokes::scheme::{run, Scheme, Trajectory};
use cstokes::spaces::{commuting_defect, Field, Space, Spaces};

const SEED: u64 = 20_240_917;

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn outcome(id: usize, pass: bool, detail: impl Into<String>) -> Outcome {
    let o = Outcome {
        id,
        pass,
        detail: detail.into(),
    };
    println!(
        "criterion {:>2}: {}  {}",
        o.id,
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    o
}

fn config(nx: usize, t_final: f64, rho: &str, ux: &str, uy: &str) -> Config {
    Config::parse(&format!(
        r#"
[physics]
mu = 1.0
lambda = 0.0
a = 1.0
gamma = 1.5
[mesh]
nx = {nx}
[time]
t_final = {t_final:?}
kappa = 0.5
[initial]
rho = "{rho}"
ux = "{ux}"
uy = "{uy}"
"#
    ))
    .expect("acceptance config is valid")
}

fn steps_config(nx: usize, steps: usize, rho: &str, ux: &str, uy: &str) -> Config {
    let h = Mesh::unit_square(nx).unwrap().h();
    config(nx, steps as f64 * 0.5 * h, rho, ux, uy)
}

/// The 50-step run on a 16×16 mesh shared by criteria 1, 2, 3, 6 and 10.
fn main_run() -> (Trajectory, Duration) {
    let c = steps_config(
        16,
        50,
        "1 + 0.3*sin(pi*x)*cos(pi*y)",
        "sin(pi*x)^2*sin(2*pi*y)",
        "-sin(2*pi*x)*sin(pi*y)^2",
    );
    let start = Instant::now();
    let traj = run(&c).expect("main run succeeds");
    (traj, start.elapsed())
}

fn mass(f: &Field) -> f64 {
    f.values()
        .iter()
        .zip(f.mesh().areas())
        .map(|(r, a)| r * a)
        .sum()
}

fn criterion_1(traj: &Trajectory, elapsed: Duration) -> Outcome {
    let m0 = mass(&traj.states[0].rho);
    let drift = traj
        .states
        .iter()
        .map(|s| (mass(&s.rho) - m0).abs() / m0)
        .fold(0.0, f64::max);
    let steps = traj.states.len() - 1;
    outcome(
        1,
        steps == 50 && drift <= 1e-12 && elapsed < Duration::from_secs(30),
        format!(
            "mass conservation: max relative drift {drift:.2e} over {steps} steps, {elapsed:.2?}"
        ),
    )
}

fn criterion_2(traj: &Trajectory) -> Outcome {
    let mut slack = f64::INFINITY;
    for (pair, report) in traj.states.windows(2).zip(&traj.reports) {
        let min_prev = pair[0]
            .rho
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let div = pair[1]
            .u
            .divergence()
            .unwrap()
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()));
        let bound = min_prev / (1.0 + traj.dt() * div);
        let min_new = pair[1]
            .rho
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        slack = slack.min(min_new - bound);
        assert!((report.positivity_bound - bound).abs() <= 1e-14 * bound);
    }
    outcome(
        2,
        slack >= -1e-12,
        format!("positivity bound: smallest slack {slack:.3e}"),
    )
}

fn criterion_3(traj: &Trajectory) -> Outcome {
    let records = trajectory_records(traj).unwrap();
    let e0 = records[0].energy;
    let worst_defect = records[1..]
        .iter()
        .map(|r| r.energy_defect)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_rise = records
        .windows(2)
        .map(|p| p[1].energy - p[0].energy)
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        3,
        worst_defect <= 1e-8 * e0 && worst_rise <= 1e-8 * e0,
        format!(
            "energy inequality: max defect {:.2e} E0, max increase {:.2e} E0",
            worst_defect / e0,
            worst_rise / e0
        ),
    )
}

/// Random smooth trigonometric vector field with its exact divergence.
struct TrigField {
    modes: Vec<([f64; 2], f64, [f64; 2])>,
}

impl TrigField {
    fn random(rng: &mut impl Rng) -> Self {
        let modes = (0..4)
            .map(|_| {
                let k = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
                let phase = rng.gen_range(0.0..2.0 * PI);
                let amp = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                (k, phase, amp)
            })
            .collect();
        Self { modes }
    }

    fn value(&self, x: Point) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (k, phase, amp) in &self.modes {
            let s = (k[0] * x[0] + k[1] * x[1] + phase).sin();
            v[0] += amp[0] * s;
            v[1] += amp[1] * s;
        }
        v
    }

    fn div(&self, x: Point) -> f64 {
        self.modes
            .iter()
            .map(|(k, phase, amp)| {
                (k[0] * amp[0] + k[1] * amp[1]) * (k[0] * x[0] + k[1] * x[1] + phase).cos()
            })
            .sum()
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mesh = Arc::new(Mesh::unit_square(8).unwrap());
    let mut rng = rand::rngs::StdRng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = TrigField::random(&mut rng);
        worst = worst.max(commuting_defect(&mesh, |x| f.value(x), |x| f.div(x)));
    }
    let elapsed = start.elapsed();
    outcome(
        4,
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("commuting diagram: max defect {worst:.2e} over 20 fields, {elapsed:.2?}"),
    )
}

fn criterion_5() -> Outcome {
    let spaces = Spaces::new(Arc::new(Mesh::unit_square(8).unwrap()));
    let mass = forms::mass_v(&spaces.v);
    let mut rng = rand::rngs::StdRng::seed_from_u64(SEED + 5);
    let (mut recon, mut ortho, mut div) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let u: Vec<f64> = (0..spaces.v.dim())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let u = Field::new(spaces.v.clone(), u).unwrap();
        let norm_sq = mass.bilinear(u.values(), u.values());
        let parts = hodge_decompose(&spaces, &u).unwrap();
        let r: Vec<f64> = u
            .values()
            .iter()
            .zip(parts.curl_zeta.values())
            .zip(parts.z.values())
            .map(|((u, c), z)| u - c - z)
            .collect();
        recon = recon.max(mass.bilinear(&r, &r).sqrt() / norm_sq.sqrt());
        ortho = ortho.max(
            mass.bilinear(parts.curl_zeta.values(), parts.z.values())
                .abs()
                / norm_sq,
        );
        let (dz, du) = (parts.z.divergence().unwrap(), u.divergence().unwrap());
        div = div.max(
            dz.iter()
                .zip(&du)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    outcome(
        5,
        recon <= 1e-10 && ortho <= 1e-10 && div <= 1e-12,
        format!("Hodge decomposition: reconstruction {recon:.2e}, orthogonality {ortho:.2e}, div {div:.2e}"),
    )
}

fn criterion_6(traj: &Trajectory) -> Outcome {
    let rho0 = &traj.states[0].rho;
    let scale: f64 = rho0
        .values()
        .iter()
        .zip(rho0.mesh().areas())
        .map(|(r, a)| a * r * r)
        .sum();
    let mut worst = 0.0f64;
    for pair in traj.states.windows(2) {
        let terms = renormalized_residual(
            &traj.scheme,
            &pair[0].rho,
            &pair[1].rho,
            &pair[1].u,
            Renormalization::Square,
        )
        .unwrap();
        worst = worst.max(terms.defect());
    }
    outcome(
        6,
        worst <= 1e-9 * scale,
        format!(
            "renormalized identity (z^2): max defect {:.2e} of the initial integral",
            worst / scale
        ),
    )
}

/// Outward sign of the global face normal with respect to an element, from
/// geometry alone.
fn outward(mesh: &Mesh, face: usize, element: usize) -> f64 {
    let f = &mesh.faces()[face];
    let m = f.midpoint(mesh);
    let c = mesh.centroid(element);
    if (m[0] - c[0]) * f.normal[0] + (m[1] - c[1]) * f.normal[1] > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn transport_oracle(mesh: &Mesh, u: &Field, dt: f64) -> Vec<Vec<f64>> {
    let n = mesh.num_elements();
    let mut a = vec![vec![0.0; n]; n];
    for e in 0..n {
        a[e][e] = mesh.area(e) / dt;
    }
    for e in 0..n {
        for f in mesh.element_faces(e) {
            let Some(d) = u.space().dof(f) else { continue };
            let face = &mesh.faces()[f];
            let other = if face.minus == Some(e) {
                face.plus
            } else {
                face.minus
            };
            let Some(other) = other else { continue };
            let g = outward(mesh, f, e) * u.values()[d];
            if g > 0.0 {
                a[e][e] += g;
            } else {
                a[e][other] += g;
            }
        }
    }
    a
}

/// Dense saddle-point matrix from element formulas: `φ = ±(x - x_i)/(2|E|)`
/// for the face opposite vertex `i`, midpoint-rule integration (exact for
/// quadratics) and P1 gradients from a 2×2 solve.
fn momentum_oracle(scheme: &Scheme) -> Vec<Vec<f64>> {
    let spaces = scheme.spaces();
    let mesh = scheme.mesh();
    let (nv, nw) = (spaces.v.dim(), spaces.w.dim());
    let physics = scheme.physics();
    let (mu, lambda, dt) = (physics.mu, physics.lambda, scheme.dt());
    let mut k = vec![vec![0.0; nv + nw]; nv + nw];
    for e in 0..mesh.num_elements() {
        let tri = mesh.elements()[e];
        let x = tri.map(|v| mesh.vertices()[v]);
        let area = 0.5
            * ((x[1][0] - x[0][0]) * (x[2][1] - x[0][1])
                - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]))
                .abs();
        let mids: Vec<Point> = (0..3)
            .map(|i| {
                let (a, b) = (x[(i + 1) % 3], x[(i + 2) % 3]);
                [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
            })
            .collect();
        // face opposite local vertex i, as a global face index
        let faces: Vec<usize> = (0..3)
            .map(|i| {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = [a.min(b), a.max(b)];
                mesh.faces().iter().position(|f| f.vertices == key).unwrap()
            })
            .collect();
        let rt: Vec<Option<(usize, f64)>> = (0..3)
            .map(|i| {
                spaces
                    .v
                    .dof(faces[i])
                    .map(|d| (d, outward(mesh, faces[i], e)))
            })
            .collect();
        let phi = |i: usize, p: Point| {
            let s = rt[i].unwrap().1;
            [
                s * (p[0] - x[i][0]) / (2.0 * area),
                s * (p[1] - x[i][1]) / (2.0 * area),
            ]
        };
        let lambda_at = |a: usize, p: Point| {
            let (b, c) = (x[(a + 1) % 3], x[(a + 2) % 3]);
            let num = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0]);
            let den = (c[0] - b[0]) * (x[a][1] - b[1]) - (c[1] - b[1]) * (x[a][0] - b[0]);
            num / den
        };
        let grad = |a: usize| {
            let (b, c) = (x[(a + 1) % 3], x[(a + 2) % 3]);
            let den = (c[0] - b[0]) * (x[a][1] - b[1]) - (c[1] - b[1]) * (x[a][0] - b[0]);
            [-(c[1] - b[1]) / den, (c[0] - b[0]) / den]
        };
        let w = |a: usize| spaces.w.dof(tri[a]);
        for i in 0..3 {
            let Some((di, si)) = rt[i] else { continue };
            for j in 0..3 {
                let Some((dj, sj)) = rt[j] else { continue };
                let m: f64 = mids
                    .iter()
                    .map(|&p| {
                        let (a, b) = (phi(i, p), phi(j, p));
                        area / 3.0 * (a[0] * b[0] + a[1] * b[1])
                    })
                    .sum();
                k[di][dj] += m / dt + (mu + lambda) * (si / area) * (sj / area) * area;
            }
            for a in 0..3 {
                let Some(da) = w(a) else { continue };
                let g = grad(a);
                let curl = [g[1], -g[0]];
                let c: f64 = mids
                    .iter()
                    .map(|&p| {
                        let f = phi(i, p);
                        area / 3.0 * (curl[0] * f[0] + curl[1] * f[1])
                    })
                    .sum();
                k[di][nv + da] += mu * c;
                k[nv + da][di] += mu * c;
            }
        }
        for a in 0..3 {
            let Some(da) = w(a) else { continue };
            for b in 0..3 {
                let Some(db) = w(b) else { continue };
                let m: f64 = mids
                    .iter()
                    .map(|&p| area / 3.0 * lambda_at(a, p) * lambda_at(b, p))
                    .sum();
                k[nv + da][nv + db] -= mu * m;
            }
        }
    }
    k
}

fn criterion_7() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(SEED + 7);
    let c = config(1, 0.1, "1", "0", "0");
    let dt = 0.37;
    let mesh = Arc::new(Mesh::unit_square(1).unwrap());
    let s = Scheme::new(mesh.clone(), c.physics.clone(), dt, c.solver).unwrap();
    let mut transport_exact = true;
    for _ in 0..10 {
        let u: Vec<f64> = (0..s.spaces().v.dim())
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        let u = Field::new(s.spaces().v.clone(), u).unwrap();
        let a = s.assemble_transport(&u).unwrap().to_dense();
        transport_exact &= a == transport_oracle(&mesh, &u, dt);
    }

    let mesh = Arc::new(Mesh::unit_square(2).unwrap());
    let mut physics = c.physics.clone();
    physics.lambda = 0.4;
    physics.mu = 1.3;
    let s = Scheme::new(mesh, physics, 0.05, c.solver).unwrap();
    let k = s.momentum_matrix().to_dense();
    let oracle = momentum_oracle(&s);
    let diff = k
        .iter()
        .flatten()
        .zip(oracle.iter().flatten())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    outcome(
        7,
        transport_exact && diff <= 1e-11,
        format!("oracles: transport exact = {transport_exact}, momentum max difference {diff:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let v = |x: Point| {
        [
            (PI * x[0]).sin() * (PI * x[1]).cos(),
            (PI * x[0]).cos() * (PI * x[1]).sin(),
        ]
    };
    let errors: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let mesh = Arc::new(Mesh::unit_square(n).unwrap());
            let pv = Space::v_unconstrained(mesh.clone()).interpolate_v(v);
            (0..mesh.num_elements())
                .map(|e| {
                    quadrature::integrate_element(&mesh, e, |x| {
                        let (a, b) = (v(x), pv.vector_at(e, x));
                        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
                    })
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let rates: Vec<f64> = errors.windows(2).map(|p| (p[0] / p[1]).log2()).collect();
    let elapsed = start.elapsed();
    outcome(
        8,
        rates.iter().all(|&r| r >= 0.9) && elapsed < Duration::from_secs(10),
        format!("interpolation: errors {errors:.3?}, orders {rates:.3?}, {elapsed:.2?}"),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let c = config(
        8,
        0.25,
        "1 + 0.2*sin(pi*x)*sin(pi*y)",
        "sin(pi*x)^2*sin(2*pi*y)",
        "-sin(2*pi*x)*sin(pi*y)^2",
    );
    let rows = match convergence_study(&c, 4) {
        Ok(rows) => rows,
        Err(e) => return outcome(9, false, format!("self-convergence study failed: {e}")),
    };
    let elapsed = start.elapsed();
    let coarse = &rows[..rows.len() - 1];
    let decreasing = |f: fn(&cstokes::analysis::ConvergenceRow) -> f64| {
        coarse.windows(2).all(|p| f(&p[1]) < f(&p[0])) && coarse.iter().all(|r| f(r) > 0.0)
    };
    let positive = coarse[1..]
        .iter()
        .all(|r| r.u_rate.is_some_and(|q| q > 0.0) && r.rho_rate.is_some_and(|q| q > 0.0));
    let table: Vec<String> = coarse
        .iter()
        .map(|r| {
            format!(
                "h={:.4} u={:.3e} rho={:.3e} rates=({},{})",
                r.h,
                r.u_error,
                r.rho_error,
                r.u_rate.map_or("-".into(), |q| format!("{q:.2}")),
                r.rho_rate.map_or("-".into(), |q| format!("{q:.2}")),
            )
        })
        .collect();
    outcome(
        9,
        decreasing(|r| r.u_error)
            && decreasing(|r| r.rho_error)
            && positive
            && elapsed < Duration::from_secs(600),
        format!("self-convergence: [{}], {elapsed:.2?}", table.join("; ")),
    )
}

fn criterion_10(traj: &Trajectory) -> Outcome {
    let vorticity = traj
        .reports
        .iter()
        .map(|r| r.vorticity_residual)
        .fold(0.0, f64::max);
    let eq = run(&steps_config(8, 20, "1.3", "0", "0")).unwrap();
    let first = &eq.states[0];
    let drift = eq
        .states
        .iter()
        .flat_map(|s| {
            let rho = s
                .rho
                .values()
                .iter()
                .zip(first.rho.values())
                .map(|(a, b)| (a - b).abs());
            let u = s.u.values().iter().map(|v| v.abs());
            rho.chain(u).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    let steps = eq.states.len() - 1;
    outcome(
        10,
        vorticity <= 1e-11 && drift <= 1e-10 && steps == 20,
        format!(
            "vorticity residual {vorticity:.2e}; equilibrium drift {drift:.2e} over {steps} steps"
        ),
    )
}

#[test]
fn acceptance() {
    let (traj, elapsed) = main_run();
    let outcomes = [
        criterion_1(&traj, elapsed),
        criterion_2(&traj),
        criterion_3(&traj),
        criterion_4(),
        criterion_5(),
        criterion_6(&traj),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(&traj),
    ];
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
