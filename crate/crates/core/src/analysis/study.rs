use std::f64::consts::PI;
use std::sync::Arc;

use crate::config::Config;
use crate::mesh::Mesh;
use crate::quadrature;
use crate::scheme::{advance, setup_on_mesh, State, Trajectory};
use crate::spaces::Field;

use super::{weak_continuity_residual, AnalysisError, TestFunction};

/// Barycentric slack when deciding that a fine vertex lies in a coarse
/// element.
const CONTAINMENT_SLACK: f64 = 1e-10;

/// One level of a self-convergence study. Errors are measured against the
/// finest level in `L²(0,T;L²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub elements: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub u_error: f64,
    pub rho_error: f64,
    /// `log₂(e_{l-1}/e_l)`, when both errors are positive.
    pub u_rate: Option<f64>,
    pub rho_rate: Option<f64>,
    /// Weak continuity residual against a fixed smooth test function.
    pub weak_residual: f64,
}

/// For each element of `fine`, the element of `coarse` containing it.
pub fn ancestors(coarse: &Mesh, fine: &Mesh) -> Result<Vec<usize>, AnalysisError> {
    let grid = BucketGrid::new(coarse);
    (0..fine.num_elements())
        .map(|e| {
            let verts = fine.element_vertices(e);
            let c = fine.centroid(e);
            grid.candidates(c)
                .iter()
                .copied()
                .find(|&k| {
                    verts.iter().all(|&x| {
                        coarse
                            .barycentric(k, x)
                            .iter()
                            .all(|&l| l >= -CONTAINMENT_SLACK)
                    })
                })
                .ok_or(AnalysisError::NonNested { element: e })
        })
        .collect()
}

/// Uniform grid of buckets over the bounding box of a mesh, each listing the
/// elements whose bounding box meets it.
struct BucketGrid {
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(mesh: &Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for x in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(x[d]);
                hi[d] = hi[d].max(x[d]);
            }
        }
        let side = ((mesh.num_elements() as f64).sqrt().ceil() as usize).max(1);
        let dims = [side, side];
        let cell = [0, 1].map(|d| ((hi[d] - lo[d]) / side as f64).max(f64::MIN_POSITIVE));
        let mut grid = Self {
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); side * side],
        };
        for e in 0..mesh.num_elements() {
            let verts = mesh.element_vertices(e);
            let (mut a, mut b) = ([usize::MAX; 2], [0; 2]);
            for x in verts {
                let c = grid.cell_of(x);
                for d in 0..2 {
                    a[d] = a[d].min(c[d]);
                    b[d] = b[d].max(c[d]);
                }
            }
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    grid.buckets[j * dims[0] + i].push(e);
                }
            }
        }
        grid
    }

    fn cell_of(&self, x: [f64; 2]) -> [usize; 2] {
        [0, 1].map(|d| {
            let t = ((x[d] - self.origin[d]) / self.cell[d]).floor();
            (t.max(0.0) as usize).min(self.dims[d] - 1)
        })
    }

    fn candidates(&self, x: [f64; 2]) -> &[usize] {
        let c = self.cell_of(x);
        &self.buckets[c[1] * self.dims[0] + c[0]]
    }
}

/// `(Σ_m Δt ‖f(state_m)‖²)^{1/2}` over the steps `m ≥ 1` of a trajectory.
pub fn space_time_l2(trajectory: &Trajectory, f: impl Fn(&State) -> &Field) -> f64 {
    trajectory
        .states
        .windows(2)
        .map(|p| (p[1].time - p[0].time) * f(&p[1]).l2_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `L²(0,T;L²)` distances `(u, ϱ)` between a coarse trajectory injected into
/// a nested fine mesh and a fine trajectory. Both are piecewise constant in
/// time, so the time integral runs over the union of their breakpoints.
pub fn space_time_error(coarse: &Trajectory, fine: &Trajectory, ancestors: &[usize]) -> (f64, f64) {
    let mut times: Vec<f64> = coarse
        .states
        .iter()
        .chain(&fine.states)
        .map(|s| s.time)
        .collect();
    times.sort_by(f64::total_cmp);
    let t_final = times.last().copied().unwrap_or(0.0);
    let tol = 1e-12 * t_final.max(1.0);
    times.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let locate = |states: &[State], t: f64| {
        states
            .iter()
            .position(|s| s.time >= t - tol)
            .unwrap_or(states.len() - 1)
    };
    let mut cache: Option<((usize, usize), (f64, f64))> = None;
    let (mut eu, mut er) = (0.0, 0.0);
    for w in times.windows(2) {
        let key = (locate(&coarse.states, w[1]), locate(&fine.states, w[1]));
        let errors = match cache {
            Some((k, e)) if k == key => e,
            _ => {
                let e = spatial_error(&coarse.states[key.0], &fine.states[key.1], ancestors);
                cache = Some((key, e));
                e
            }
        };
        eu += (w[1] - w[0]) * errors.0;
        er += (w[1] - w[0]) * errors.1;
    }
    (eu.sqrt(), er.sqrt())
}

/// Squared `L²` distances of `u` and `ϱ` on the fine mesh.
fn spatial_error(coarse: &State, fine: &State, ancestors: &[usize]) -> (f64, f64) {
    let mesh = fine.rho.mesh();
    let (rc, rf) = (coarse.rho.values(), fine.rho.values());
    let (mut eu, mut er) = (0.0, 0.0);
    for (e, &k) in ancestors.iter().enumerate() {
        er += mesh.area(e) * (rc[k] - rf[e]).powi(2);
        eu += quadrature::integrate_element(mesh, e, |x| {
            let a = coarse.u.vector_at(k, x);
            let b = fine.u.vector_at(e, x);
            (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
        });
    }
    (eu, er)
}

/// Self-convergence study on `levels` uniformly refined structured meshes
/// starting from the config's `nx × ny`, with `Δt ≈ κh` on each level.
pub fn convergence_study(
    config: &Config,
    levels: usize,
) -> Result<Vec<ConvergenceRow>, AnalysisError> {
    if levels < 3 {
        return Err(AnalysisError::TooFewLevels(levels));
    }
    config
        .validate()
        .map_err(crate::scheme::SchemeError::from)?;
    let meshes = (0..levels)
        .map(|l| {
            Mesh::build_structured_rect(
                config.mesh.nx << l,
                config.mesh.ny() << l,
                config.mesh.bounds(),
            )
            .map(Arc::new)
            .map_err(|e| AnalysisError::Scheme(e.into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    convergence_study_on(config, &meshes)
}

/// Self-convergence study on a given nested mesh sequence, coarsest first.
pub fn convergence_study_on(
    config: &Config,
    meshes: &[Arc<Mesh>],
) -> Result<Vec<ConvergenceRow>, AnalysisError> {
    if meshes.len() < 3 {
        return Err(AnalysisError::TooFewLevels(meshes.len()));
    }
    let finest = meshes.last().expect("at least three meshes");
    let maps = meshes
        .iter()
        .map(|m| ancestors(m, finest))
        .collect::<Result<Vec<_>, _>>()?;

    let trajectories = std::thread::scope(|scope| {
        let handles: Vec<_> = meshes
            .iter()
            .map(|mesh| {
                scope.spawn(move || -> Result<Trajectory, AnalysisError> {
                    let (scheme, initial, grid) = setup_on_mesh(config, mesh.clone())?;
                    advance(scheme, initial, grid, &mut |_, _, _, _| {
                        Ok::<_, AnalysisError>(())
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("study level panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let reference = trajectories.last().expect("at least three levels");
    let phi = study_test_function(config);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(meshes.len());
    for (level, (traj, map)) in trajectories.iter().zip(&maps).enumerate() {
        let (u_error, rho_error) = space_time_error(traj, reference, map);
        let rate = |prev: Option<f64>, e: f64| match prev {
            Some(p) if p > 0.0 && e > 0.0 => Some((p / e).log2()),
            _ => None,
        };
        let previous = rows.last();
        let mesh = traj.scheme.mesh();
        rows.push(ConvergenceRow {
            level,
            elements: mesh.num_elements(),
            h: mesh.h(),
            dt: traj.dt(),
            steps: traj.states.len() - 1,
            u_error,
            rho_error,
            u_rate: rate(previous.map(|r| r.u_error), u_error),
            rho_rate: rate(previous.map(|r| r.rho_error), rho_error),
            weak_residual: weak_continuity_residual(traj, &phi),
        });
    }
    Ok(rows)
}

/// `φ(t,x) = (1 - t/T)² cos(πx̂) cos(πŷ)` in coordinates scaled to the unit
/// square, vanishing at the final time.
fn study_test_function(config: &Config) -> TestFunction<'static> {
    let b = config.mesh.bounds();
    let (x0, y0) = (b.x_min, b.y_min);
    let (lx, ly) = (b.x_max - b.x_min, b.y_max - b.y_min);
    let t_final = config.time.t_final;
    let s = move |t: f64| {
        if t_final > 0.0 {
            1.0 - t / t_final
        } else {
            1.0
        }
    };
    TestFunction::new(
        move |t, x| s(t).powi(2) * (PI * (x[0] - x0) / lx).cos() * (PI * (x[1] - y0) / ly).cos(),
        move |t, x| {
            let (cx, sx) = ((PI * (x[0] - x0) / lx).cos(), (PI * (x[0] - x0) / lx).sin());
            let (cy, sy) = ((PI * (x[1] - y0) / ly).cos(), (PI * (x[1] - y0) / ly).sin());
            let f = s(t).powi(2);
            [-f * PI / lx * sx * cy, -f * PI / ly * cx * sy]
        },
    )
}
