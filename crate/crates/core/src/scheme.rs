//! Implicit Euler time stepping of the compressible Stokes approximation.
//!
//! Per step, given `(ϱ^{m-1}, u^{m-1})`, the scheme finds `(ϱ^m, w^m, u^m)`
//! in `Q × W × V` such that
//!
//! * the piecewise constant density satisfies the upwind continuity scheme
//!   `|E| (ϱ_E - ϱ_E^{m-1}) + Δt Σ_Γ (ϱ_E g⁺ + ϱ_N g⁻) = 0`, where `g` is the
//!   outward flux `∫_Γ u·n_E` through interior face `Γ` and `ϱ_N` the density
//!   across it;
//! * the velocity and vorticity satisfy, for all `(η, v) ∈ W × V`,
//!   `∫ (u - u^{m-1})/Δt·v + μ curl w·v + ((μ+λ) div u - p(ϱ)) div v = 0`
//!   and `∫ w η - u·curl η = 0`.
//!
//! The two are coupled through `p(ϱ^m)` and the upwinding on `u^m`; the
//! nonlinear system is solved by damped Picard iteration.

use std::cell::Cell;
use std::sync::Arc;

use thiserror::Error;

use crate::config::{Config, ConfigError, InitialData, Physics, SolverConfig};
use crate::expr::ExprError;
use crate::forms;
use crate::linalg::{CsrMatrix, LinalgError, SparseLu, TripletBuilder};
use crate::mesh::{Mesh, MeshError, Point};
use crate::quadrature;
use crate::spaces::{rt_shape, Field, SpaceError, SpaceKind, Spaces};

/// Allowed undershoot of the discrete minimum principle.
pub const POSITIVITY_SLACK: f64 = 1e-12;
/// Relative residual demanded of every linear solve in the scheme.
pub const SOLVE_TOLERANCE: f64 = 1e-12;
/// Fraction of the pressure-driven velocity scale below which Picard
/// increments of `u` are measured absolutely.
pub const VELOCITY_FLOOR: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial data: {0}")]
    Expression(#[from] ExprError),
    #[error("nonpositive density {value:e} on element {element}")]
    NonPositiveDensity { element: usize, value: f64 },
    #[error("density {value:e} on element {element} violates the minimum bound {bound:e}")]
    PositivityViolation {
        element: usize,
        value: f64,
        bound: f64,
    },
    #[error(
        "Picard iteration did not converge in {iterations} iterations; increments: {history:?}"
    )]
    PicardDiverged {
        iterations: usize,
        history: Vec<f64>,
    },
}

/// Elementwise `a ϱ^γ`.
pub fn pressure(rho: &Field, a: f64, gamma: f64) -> Result<Field, SchemeError> {
    rho.require(SpaceKind::Q)?;
    let mut values = Vec::with_capacity(rho.values().len());
    for (element, &r) in rho.values().iter().enumerate() {
        if !(r > 0.0) {
            return Err(SchemeError::NonPositiveDensity { element, value: r });
        }
        values.push(a * r.powf(gamma));
    }
    Ok(rho.with_values(values)?)
}

/// The discrete solution at one time level.
#[derive(Clone, Debug)]
pub struct State {
    pub step: usize,
    pub time: f64,
    pub rho: Field,
    pub w: Field,
    pub u: Field,
}

/// Convergence and consistency data of one coupled step.
#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub picard_iterations: usize,
    /// Relative increments per Picard iteration.
    pub history: Vec<f64>,
    pub damping: f64,
    /// `‖A(u)ϱ - Mϱ^{m-1}/Δt‖_∞ / ‖Mϱ^{m-1}/Δt‖_∞`.
    pub continuity_residual: f64,
    /// Relative ∞-norm residual of the momentum system.
    pub momentum_residual: f64,
    /// `max_η |∫ w η - u·curl η|` over the `W` basis.
    pub vorticity_residual: f64,
    /// `‖div u^m‖_∞`.
    pub div_u_max: f64,
    /// `min ϱ^{m-1} / (1 + Δt ‖div u^m‖_∞)`.
    pub positivity_bound: f64,
}

/// Number of steps and step size with `steps · dt = t_final`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    /// Step size nearest to `κh` dividing `t_final`.
    pub fn new(t_final: f64, kappa: f64, h: f64) -> Self {
        let target = kappa * h;
        if t_final <= 0.0 {
            return Self {
                steps: 0,
                dt: target,
            };
        }
        let steps = ((t_final / target).round() as usize).max(1);
        Self {
            steps,
            dt: t_final / steps as f64,
        }
    }
}

/// Assembled and factorized operators of the scheme for one mesh and step
/// size.
#[derive(Clone, Debug)]
pub struct Scheme {
    spaces: Spaces,
    physics: Physics,
    solver: SolverConfig,
    dt: f64,
    mass_q: Vec<f64>,
    mass_v: CsrMatrix,
    mass_w: CsrMatrix,
    div: CsrMatrix,
    div_t: CsrMatrix,
    coupling: CsrMatrix,
    coupling_t: CsrMatrix,
    momentum: CsrMatrix,
    momentum_lu: Arc<SparseLu>,
}

impl Scheme {
    pub fn new(
        mesh: Arc<Mesh>,
        physics: Physics,
        dt: f64,
        solver: SolverConfig,
    ) -> Result<Self, SchemeError> {
        let spaces = Spaces::new(mesh);
        let mass_q = forms::mass_q(&spaces.q);
        let mass_v = forms::mass_v(&spaces.v);
        let mass_w = forms::mass_nodal(&spaces.w);
        let div = forms::divergence(&spaces.q, &spaces.v);
        let div_t = div.transpose();
        let coupling = forms::curl_coupling(&spaces.v, &spaces.w);
        let coupling_t = coupling.transpose();
        let momentum = momentum_matrix(
            &mass_v,
            &forms::div_div(&spaces.v),
            &coupling,
            &mass_w,
            &physics,
            dt,
        );
        let momentum_lu = Arc::new(SparseLu::factor(&momentum)?);
        Ok(Self {
            spaces,
            physics,
            solver,
            dt,
            mass_q,
            mass_v,
            mass_w,
            div,
            div_t,
            coupling,
            coupling_t,
            momentum,
            momentum_lu,
        })
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.spaces.mesh
    }

    pub fn physics(&self) -> &Physics {
        &self.physics
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mass_v(&self) -> &CsrMatrix {
        &self.mass_v
    }

    pub fn mass_w(&self) -> &CsrMatrix {
        &self.mass_w
    }

    /// `∫ curl η_a · φ_i`, rows `V`, columns `W`.
    pub fn curl_coupling(&self) -> &CsrMatrix {
        &self.coupling
    }

    /// The symmetric saddle-point matrix on `[u; w]`.
    pub fn momentum_matrix(&self) -> &CsrMatrix {
        &self.momentum
    }

    /// `ϱ⁰_h` as elementwise means, `u⁰_h` as the `L²` projection onto `V`,
    /// and `w⁰_h` from the vorticity equation.
    pub fn init_state(
        &self,
        rho0: impl Fn(Point) -> f64,
        u0: impl Fn(Point) -> [f64; 2],
    ) -> Result<State, SchemeError> {
        let rho = self.spaces.q.interpolate_q(rho0);
        for (element, &value) in rho.values().iter().enumerate() {
            if !(value > 0.0) {
                return Err(SchemeError::NonPositiveDensity { element, value });
            }
        }
        let mesh = self.mesh();
        let v = &self.spaces.v;
        let mut load = vec![0.0; v.dim()];
        for e in 0..mesh.num_elements() {
            let local = v.rt_local(e);
            for (x, wq) in quadrature::element_points(mesh, e) {
                let f = u0(x);
                for (i, &(dof, sign)) in local.iter().enumerate() {
                    if let Some(d) = dof {
                        let phi = rt_shape(mesh, e, i, x);
                        load[d] += wq * sign * (f[0] * phi[0] + f[1] * phi[1]);
                    }
                }
            }
        }
        let u =
            SparseLu::factor(&self.mass_v)?.solve_checked(&self.mass_v, &load, SOLVE_TOLERANCE)?;
        let u = Field::new(v.clone(), u.x)?;
        let w = self.vorticity_of(&u)?;
        Ok(State {
            step: 0,
            time: 0.0,
            rho,
            w,
            u,
        })
    }

    /// Initial state from parsed expressions; the density must be positive
    /// at every quadrature point.
    pub fn init_from_expressions(&self, data: &InitialData) -> Result<State, SchemeError> {
        let mesh = self.mesh();
        for e in 0..mesh.num_elements() {
            for (x, _) in quadrature::element_points(mesh, e) {
                let value = data.rho.eval(x[0], x[1])?;
                if !(value > 0.0) {
                    return Err(SchemeError::NonPositiveDensity { element: e, value });
                }
                data.ux.eval(x[0], x[1])?;
                data.uy.eval(x[0], x[1])?;
            }
        }
        let failure = Cell::new(None);
        let eval = |e: &crate::expr::Expr, x: Point| match e.eval(x[0], x[1]) {
            Ok(v) => v,
            Err(err) => {
                failure.set(Some(err));
                f64::NAN
            }
        };
        let state = self.init_state(
            |x| eval(&data.rho, x),
            |x| [eval(&data.ux, x), eval(&data.uy, x)],
        );
        if let Some(err) = failure.take() {
            return Err(err.into());
        }
        state
    }

    /// `w` solving `∫ w η = ∫ u·curl η` for all `η ∈ W`.
    pub fn vorticity_of(&self, u: &Field) -> Result<Field, SchemeError> {
        u.require(SpaceKind::V)?;
        let rhs = self.coupling_t.mul_vec(u.values());
        let sol =
            SparseLu::factor(&self.mass_w)?.solve_checked(&self.mass_w, &rhs, SOLVE_TOLERANCE)?;
        Ok(Field::new(self.spaces.w.clone(), sol.x)?)
    }

    /// Upwind continuity matrix `A(u) = M_Q/Δt + F(u)` over `Q` dofs, with
    /// `A(u) ϱ^m = M_Q ϱ^{m-1} / Δt`.
    pub fn assemble_transport(&self, u: &Field) -> Result<CsrMatrix, SchemeError> {
        u.require(SpaceKind::V)?;
        let n = self.spaces.q.dim();
        let mut t = TripletBuilder::with_capacity(n, n, n + 4 * u.values().len());
        for (e, &area) in self.mass_q.iter().enumerate() {
            t.push(e, e, area / self.dt);
        }
        t.extend(upwind_flux(&self.spaces, u));
        Ok(t.build()?)
    }

    /// One upwind continuity solve for `ϱ^m` given `u^m`.
    pub fn transport_step(&self, rho_prev: &Field, u: &Field) -> Result<Field, SchemeError> {
        rho_prev.require(SpaceKind::Q)?;
        let min_prev = positive_min(rho_prev)?;
        let a = self.assemble_transport(u)?;
        let rhs: Vec<f64> = rho_prev
            .values()
            .iter()
            .zip(&self.mass_q)
            .map(|(r, m)| r * m / self.dt)
            .collect();
        let sol = SparseLu::factor(&a)?.solve_checked(&a, &rhs, SOLVE_TOLERANCE)?;
        let rho = rho_prev.with_values(sol.x)?;
        let bound = min_prev / (1.0 + self.dt * max_abs(&u.divergence()?));
        let slack = POSITIVITY_SLACK * min_prev.max(1.0);
        for (element, &value) in rho.values().iter().enumerate() {
            if value < bound - slack {
                return Err(SchemeError::PositivityViolation {
                    element,
                    value,
                    bound,
                });
            }
        }
        Ok(rho)
    }

    fn momentum_rhs(&self, rho: &Field, u_prev: &Field) -> Result<(Vec<f64>, f64), SchemeError> {
        let p = pressure(rho, self.physics.a, self.physics.gamma)?;
        let mut rhs = self.mass_v.mul_vec(u_prev.values());
        rhs.iter_mut().for_each(|r| *r /= self.dt);
        let scale = max_abs(&rhs) + max_abs(p.values());
        let bp = self.div_t.mul_vec(p.values());
        rhs.iter_mut().zip(&bp).for_each(|(r, b)| *r += b);
        rhs.resize(rhs.len() + self.spaces.w.dim(), 0.0);
        Ok((rhs, scale))
    }

    /// Solves the mixed velocity-vorticity system for `(w^m, u^m)` given the
    /// density `ϱ^m` and the previous velocity.
    pub fn momentum_step(
        &self,
        rho: &Field,
        u_prev: &Field,
    ) -> Result<(Field, Field), SchemeError> {
        u_prev.require(SpaceKind::V)?;
        let (rhs, _) = self.momentum_rhs(rho, u_prev)?;
        let sol = self
            .momentum_lu
            .solve_checked(&self.momentum, &rhs, SOLVE_TOLERANCE)?;
        let nv = self.spaces.v.dim();
        let mut x = sol.x;
        let w = x.split_off(nv);
        Ok((
            Field::new(self.spaces.w.clone(), w)?,
            Field::new(self.spaces.v.clone(), x)?,
        ))
    }

    /// Relative residual of the continuity scheme.
    pub fn continuity_residual(
        &self,
        rho_prev: &Field,
        rho: &Field,
        u: &Field,
    ) -> Result<f64, SchemeError> {
        let a = self.assemble_transport(u)?;
        let rhs: Vec<f64> = rho_prev
            .values()
            .iter()
            .zip(&self.mass_q)
            .map(|(r, m)| r * m / self.dt)
            .collect();
        let ar = a.mul_vec(rho.values());
        let defect = ar
            .iter()
            .zip(&rhs)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        Ok(defect / max_abs(&rhs))
    }

    /// Relative residual of the momentum system.
    pub fn momentum_residual(
        &self,
        rho: &Field,
        u_prev: &Field,
        w: &Field,
        u: &Field,
    ) -> Result<f64, SchemeError> {
        let (rhs, scale) = self.momentum_rhs(rho, u_prev)?;
        let mut x = u.values().to_vec();
        x.extend_from_slice(w.values());
        let kx = self.momentum.mul_vec(&x);
        let defect = kx
            .iter()
            .zip(&rhs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(defect / scale)
    }

    /// `max_a |∫ w η_a - u·curl η_a|`.
    pub fn vorticity_residual(&self, w: &Field, u: &Field) -> Result<f64, SchemeError> {
        w.require(SpaceKind::W)?;
        u.require(SpaceKind::V)?;
        let mw = self.mass_w.mul_vec(w.values());
        let cu = self.coupling_t.mul_vec(u.values());
        Ok(mw
            .iter()
            .zip(&cu)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// One implicit step: fixed point of `u ↦ ϱ(u) ↦ p(ϱ) ↦ u` by damped
    /// Picard iteration. The damping factor is halved whenever the increment
    /// grows.
    pub fn coupled_step(&self, prev: &State) -> Result<(State, StepReport), SchemeError> {
        let tol = self.solver.picard_tol;
        let mut theta = self.solver.damping;
        let mut u_iter = prev.u.clone();
        let mut rho_last = prev.rho.clone();
        let mut history = Vec::new();
        let mut last_increment = f64::INFINITY;
        // velocities far below what the pressure can drive in one step are
        // compared in absolute terms, otherwise roundoff never converges
        let u_floor = VELOCITY_FLOOR * self.velocity_scale(&prev.rho)?;

        for it in 1..=self.solver.picard_max_iter {
            let rho = self.transport_step(&prev.rho, &u_iter)?;
            let (w, u_new) = self.momentum_step(&rho, &prev.u)?;

            let du = self.v_norm_diff(&u_new, &u_iter)
                / self.v_norm(&u_new).max(self.v_norm(&prev.u)).max(u_floor);
            let drho = l2_diff(&rho, &rho_last, &self.mass_q) / l2_diff_zero(&rho, &self.mass_q);
            let increment = du.max(drho);
            history.push(increment);

            if increment <= tol {
                let rho = if du == 0.0 {
                    rho
                } else {
                    self.transport_step(&prev.rho, &u_new)?
                };
                let report = self.report(prev, &rho, &w, &u_new, it, history, theta)?;
                let state = State {
                    step: prev.step + 1,
                    time: prev.time + self.dt,
                    rho,
                    w,
                    u: u_new,
                };
                return Ok((state, report));
            }
            if increment > last_increment {
                theta *= 0.5;
            }
            last_increment = increment;
            u_iter = u_iter.axpby(1.0 - theta, &u_new, theta)?;
            rho_last = rho;
        }
        Err(SchemeError::PicardDiverged {
            iterations: self.solver.picard_max_iter,
            history,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        prev: &State,
        rho: &Field,
        w: &Field,
        u: &Field,
        iterations: usize,
        history: Vec<f64>,
        damping: f64,
    ) -> Result<StepReport, SchemeError> {
        let div_u_max = max_abs(&u.divergence()?);
        let min_prev = positive_min(&prev.rho)?;
        Ok(StepReport {
            picard_iterations: iterations,
            history,
            damping,
            continuity_residual: self.continuity_residual(&prev.rho, rho, u)?,
            momentum_residual: self.momentum_residual(rho, &prev.u, w, u)?,
            vorticity_residual: self.vorticity_residual(w, u)?,
            div_u_max,
            positivity_bound: min_prev / (1.0 + self.dt * div_u_max),
        })
    }

    /// `Δt ‖p(ϱ)‖_∞ |Ω|^{1/2} / h`: the velocity a pressure jump of size `p`
    /// across one cell generates over one step.
    fn velocity_scale(&self, rho: &Field) -> Result<f64, SchemeError> {
        let p = pressure(rho, self.physics.a, self.physics.gamma)?;
        let mesh = self.mesh();
        Ok(self.dt * max_abs(p.values()) * mesh.total_area().sqrt() / mesh.h())
    }

    fn v_norm(&self, u: &Field) -> f64 {
        self.mass_v.bilinear(u.values(), u.values()).max(0.0).sqrt()
    }

    fn v_norm_diff(&self, a: &Field, b: &Field) -> f64 {
        let d: Vec<f64> = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .collect();
        self.mass_v.bilinear(&d, &d).max(0.0).sqrt()
    }

    /// `(B u)_E = ∫_E div u`.
    pub fn div_matrix(&self) -> &CsrMatrix {
        &self.div
    }
}

fn momentum_matrix(
    mass_v: &CsrMatrix,
    div_div: &CsrMatrix,
    coupling: &CsrMatrix,
    mass_w: &CsrMatrix,
    physics: &Physics,
    dt: f64,
) -> CsrMatrix {
    let nv = mass_v.nrows();
    let nw = mass_w.nrows();
    let mu = physics.mu;
    let mut t = TripletBuilder::new(nv + nw, nv + nw);
    t.push_block(mass_v, 0, 0, 1.0 / dt);
    t.push_block(div_div, 0, 0, mu + physics.lambda);
    t.push_block(coupling, 0, nv, mu);
    t.push_block(&coupling.transpose(), nv, 0, mu);
    t.push_block(mass_w, nv, nv, -mu);
    t.build().expect("blocks fit the saddle-point matrix")
}

/// Flux part of the upwind continuity operator: for each interior face
/// with flux `g` from its minus element `m` to its plus element `p`, the
/// outflowing density is taken from the upwind side.
pub(crate) fn upwind_flux(spaces: &Spaces, u: &Field) -> TripletBuilder {
    let n = spaces.q.dim();
    let mesh = &spaces.mesh;
    let mut t = TripletBuilder::with_capacity(n, n, 4 * u.values().len());
    for (dof, &g) in u.values().iter().enumerate() {
        let face = &mesh.faces()[spaces.v.entity(dof)];
        let (Some(m), Some(p)) = (face.minus, face.plus) else {
            continue;
        };
        let (gp, gm) = (g.max(0.0), g.min(0.0));
        // element m: outward flux g; element p: outward flux -g
        t.push(m, m, gp);
        t.push(m, p, gm);
        t.push(p, p, -gm);
        t.push(p, m, -gp);
    }
    t
}

fn positive_min(rho: &Field) -> Result<f64, SchemeError> {
    let mut min = f64::INFINITY;
    for (element, &value) in rho.values().iter().enumerate() {
        if !(value > 0.0) {
            return Err(SchemeError::NonPositiveDensity { element, value });
        }
        min = min.min(value);
    }
    Ok(min)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_diff(a: &Field, b: &Field, mass: &[f64]) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .zip(mass)
        .map(|((x, y), m)| m * (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn l2_diff_zero(a: &Field, mass: &[f64]) -> f64 {
    a.values()
        .iter()
        .zip(mass)
        .map(|(x, m)| m * x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE)
}

/// A computed trajectory `(ϱ^m, w^m, u^m)`, `m = 0..=M`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub states: Vec<State>,
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.scheme.dt()
    }

    pub fn final_time(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.time)
    }
}

/// Builds the mesh, operators and initial state described by a config.
pub fn setup(config: &Config) -> Result<(Scheme, State, TimeGrid), SchemeError> {
    config.validate()?;
    let mesh = Arc::new(Mesh::build_structured_rect(
        config.mesh.nx,
        config.mesh.ny(),
        config.mesh.bounds(),
    )?);
    setup_on_mesh(config, mesh)
}

pub fn setup_on_mesh(
    config: &Config,
    mesh: Arc<Mesh>,
) -> Result<(Scheme, State, TimeGrid), SchemeError> {
    let grid = TimeGrid::new(config.time.t_final, config.time.kappa, mesh.h());
    let scheme = Scheme::new(mesh, config.physics.clone(), grid.dt, config.solver)?;
    let initial = scheme.init_from_expressions(&config.initial_data()?)?;
    Ok((scheme, initial, grid))
}

/// Runs the scheme to `t_final`, calling `observe` after every step with the
/// previous state, the new state and the step report.
pub fn run_observed<E: From<SchemeError>>(
    config: &Config,
    mut observe: impl FnMut(&Scheme, &State, &State, &StepReport) -> Result<(), E>,
) -> Result<Trajectory, E> {
    let (scheme, initial, grid) = setup(config)?;
    advance(scheme, initial, grid, &mut observe)
}

pub fn run(config: &Config) -> Result<Trajectory, SchemeError> {
    run_observed(config, |_, _, _, _| Ok::<_, SchemeError>(()))
}

/// Callback invoked after each step with the previous and new states.
pub type StepObserver<'a, E> =
    dyn FnMut(&Scheme, &State, &State, &StepReport) -> Result<(), E> + 'a;

/// Runs `grid.steps` steps from `initial`; the final time is set exactly to
/// `steps · dt`.
pub fn advance<E: From<SchemeError>>(
    scheme: Scheme,
    initial: State,
    grid: TimeGrid,
    observe: &mut StepObserver<'_, E>,
) -> Result<Trajectory, E> {
    let mut states = vec![initial];
    let mut reports = Vec::with_capacity(grid.steps);
    for m in 1..=grid.steps {
        let prev = states
            .last()
            .expect("trajectory starts with the initial state");
        let (mut next, report) = scheme.coupled_step(prev)?;
        next.time = m as f64 * grid.dt;
        observe(&scheme, prev, &next, &report)?;
        states.push(next);
        reports.push(report);
    }
    Ok(Trajectory {
        scheme,
        states,
        reports,
    })
}
