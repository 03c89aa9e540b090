//! Diagnostics evaluated on discrete states and trajectories.

mod hodge;
mod poincare;
mod study;

pub use hodge::{hodge_decompose, HodgeParts};
pub use poincare::{poincare_constants, PoincareConstants};
pub use study::{
    ancestors, convergence_study, convergence_study_on, space_time_error, space_time_l2,
    ConvergenceRow,
};

use thiserror::Error;

use crate::config::Physics;
use crate::linalg::LinalgError;
use crate::mesh::Point;
use crate::quadrature;
use crate::scheme::{pressure, Scheme, SchemeError, State, Trajectory};
use crate::spaces::{Field, SpaceError, SpaceKind};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("unsupported renormalization `{0}` (expected `z^2` or `zlogz`)")]
    UnsupportedRenormalization(String),
    #[error("meshes are not nested: fine element {element} lies in no coarse element")]
    NonNested { element: usize },
    #[error("a convergence study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
}

/// Per-step energy and density diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    /// `kinetic + pressure_energy`.
    pub energy: f64,
    /// `½‖u‖²`.
    pub kinetic: f64,
    /// `a/(γ-1) ∫ ϱ^γ`.
    pub pressure_energy: f64,
    /// `½‖u^m - u^{m-1}‖²`.
    pub jump_dissipation: f64,
    /// `Δt (μ‖w‖² + (μ+λ)‖div u‖²)`.
    pub viscous_dissipation: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `‖p(ϱ) - (λ+μ) div u‖_{L²}`.
    pub p_eff_l2: f64,
    /// `Δt ∫ ϱ^{γ+1}`, the step's contribution to `‖ϱ‖^{γ+1}_{L^{γ+1}(0,T;L^{γ+1})}`.
    pub rho_gamma1: f64,
    /// `E^m - E^{m-1} + jump + viscous`; nonpositive up to solver error.
    pub energy_defect: f64,
}

/// `(a/(γ-1)) ∫ ϱ^γ + ½ ∫ |u|²`, returned as `(kinetic, pressure)`.
pub fn energy(scheme: &Scheme, state: &State) -> Result<(f64, f64), AnalysisError> {
    let Physics { a, gamma, .. } = *scheme.physics();
    let p = pressure(&state.rho, a, gamma)?;
    let areas = scheme.mesh().areas();
    let pressure_energy: f64 = p
        .values()
        .iter()
        .zip(areas)
        .map(|(p, area)| area * p / (gamma - 1.0))
        .sum();
    let u = state.u.values();
    let kinetic = 0.5 * scheme.mass_v().bilinear(u, u);
    Ok((kinetic, pressure_energy))
}

impl DiagnosticsRecord {
    /// Diagnostics of `state`; dissipation terms need the previous state and
    /// vanish at the initial time.
    pub fn new(
        scheme: &Scheme,
        prev: Option<&State>,
        state: &State,
    ) -> Result<Self, AnalysisError> {
        let physics = scheme.physics();
        let areas = scheme.mesh().areas();
        let rho = state.rho.values();
        let (kinetic, pressure_energy) = energy(scheme, state)?;
        let mass = rho.iter().zip(areas).map(|(r, a)| r * a).sum();
        let p_eff = effective_viscous_flux(&state.rho, &state.u, physics)?;

        let mut record = Self {
            step: state.step,
            time: state.time,
            mass,
            energy: kinetic + pressure_energy,
            kinetic,
            pressure_energy,
            rho_min: rho.iter().copied().fold(f64::INFINITY, f64::min),
            rho_max: rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            p_eff_l2: p_eff.l2_norm(),
            ..Self::default()
        };
        if let Some(prev) = prev {
            let dt = scheme.dt();
            let du: Vec<f64> = state
                .u
                .values()
                .iter()
                .zip(prev.u.values())
                .map(|(a, b)| a - b)
                .collect();
            record.jump_dissipation = 0.5 * scheme.mass_v().bilinear(&du, &du);
            let w = state.w.values();
            let div = state.u.divergence()?;
            let div_sq: f64 = div.iter().zip(areas).map(|(d, a)| a * d * d).sum();
            record.viscous_dissipation = dt
                * (physics.mu * scheme.mass_w().bilinear(w, w)
                    + (physics.mu + physics.lambda) * div_sq);
            record.rho_gamma1 = dt
                * rho
                    .iter()
                    .zip(areas)
                    .map(|(r, a)| a * r.powf(physics.gamma + 1.0))
                    .sum::<f64>();
            let (k0, p0) = energy(scheme, prev)?;
            record.energy_defect =
                record.energy - (k0 + p0) + record.jump_dissipation + record.viscous_dissipation;
        }
        Ok(record)
    }
}

/// Records for every state of a trajectory.
pub fn trajectory_records(
    trajectory: &Trajectory,
) -> Result<Vec<DiagnosticsRecord>, AnalysisError> {
    let states = &trajectory.states;
    (0..states.len())
        .map(|m| {
            let prev = m.checked_sub(1).map(|k| &states[k]);
            DiagnosticsRecord::new(&trajectory.scheme, prev, &states[m])
        })
        .collect()
}

/// Elementwise `P_eff = p(ϱ) - (λ+μ) div u`.
pub fn effective_viscous_flux(
    rho: &Field,
    u: &Field,
    physics: &Physics,
) -> Result<Field, AnalysisError> {
    u.require(SpaceKind::V)?;
    let p = pressure(rho, physics.a, physics.gamma)?;
    let div = u.divergence()?;
    let values = p
        .values()
        .iter()
        .zip(&div)
        .map(|(p, d)| p - (physics.lambda + physics.mu) * d)
        .collect();
    Ok(rho.with_values(values)?)
}

/// Relative defect of
/// `∫ (u^m - u^{m-1})/Δt · v + μ ∫ curl w^m · v - ∫ P_eff div v = 0`
/// for a test field `v` in the scheme's `V` space.
pub fn momentum_identity_residual(
    scheme: &Scheme,
    prev: &State,
    state: &State,
    v: &Field,
) -> Result<f64, AnalysisError> {
    v.require(SpaceKind::V)?;
    let physics = scheme.physics();
    let du: Vec<f64> = state
        .u
        .values()
        .iter()
        .zip(prev.u.values())
        .map(|(a, b)| a - b)
        .collect();
    let inertia = scheme.mass_v().bilinear(v.values(), &du) / scheme.dt();
    let viscous = physics.mu
        * scheme
            .curl_coupling()
            .bilinear(v.values(), state.w.values());
    let p_eff = effective_viscous_flux(&state.rho, &state.u, physics)?;
    let div_v = scheme.div_matrix().mul_vec(v.values());
    let flux: f64 = p_eff.values().iter().zip(&div_v).map(|(p, d)| p * d).sum();
    let scale = inertia.abs() + viscous.abs() + flux.abs();
    let defect = (inertia + viscous - flux).abs();
    Ok(if scale == 0.0 { defect } else { defect / scale })
}

/// Renormalizing functions supported by [`renormalized_residual`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Renormalization {
    /// `B(z) = z²`, `b(z) = z²`, `B'' = 2`; the identity is exact.
    Square,
    /// `B(z) = z log z`, `b(z) = z`; only the inequality obtained by
    /// dropping the nonnegative diffusion terms is checked.
    ZLogZ,
}

impl Renormalization {
    pub fn from_name(name: &str) -> Result<Self, AnalysisError> {
        match name.trim() {
            "z^2" | "z2" | "square" => Ok(Self::Square),
            "zlogz" | "z log z" | "entropy" => Ok(Self::ZLogZ),
            other => Err(AnalysisError::UnsupportedRenormalization(other.to_string())),
        }
    }

    pub fn b(self, z: f64) -> f64 {
        match self {
            Self::Square => z * z,
            Self::ZLogZ => z * z.ln(),
        }
    }

    /// `z B'(z) - B(z)`.
    pub fn pressure_like(self, z: f64) -> f64 {
        match self {
            Self::Square => z * z,
            Self::ZLogZ => z,
        }
    }
}

/// The integrated terms of the renormalized continuity scheme tested with
/// `φ ≡ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormalizedTerms {
    pub kind: Renormalization,
    /// `∫ B(ϱ^m)`.
    pub b_new: f64,
    /// `∫ B(ϱ^{m-1})`.
    pub b_old: f64,
    /// `Δt ∫ b(ϱ^m) div u^m`.
    pub div_term: f64,
    /// `∫ ½B'' (ϱ^m - ϱ^{m-1})²`; zero for `ZLogZ` (not computed).
    pub time_diffusion: f64,
    /// `Δt Σ_Γ ½B'' |∫_Γ u·ν| ⟦ϱ^m⟧²`; zero for `ZLogZ` (not computed).
    pub face_diffusion: f64,
}

impl RenormalizedTerms {
    /// For `Square` the absolute defect of the identity; for `ZLogZ` the
    /// positive part of `∫B(ϱ^m) - ∫B(ϱ^{m-1}) + Δt∫b(ϱ^m) div u`.
    pub fn defect(&self) -> f64 {
        let lhs =
            self.b_new - self.b_old + self.div_term + self.time_diffusion + self.face_diffusion;
        match self.kind {
            Renormalization::Square => lhs.abs(),
            Renormalization::ZLogZ => lhs.max(0.0),
        }
    }

    /// Whether [`Self::defect`] measures an identity rather than an inequality.
    pub fn is_exact(&self) -> bool {
        self.kind == Renormalization::Square
    }
}

/// Terms of the renormalized continuity scheme for a transport step
/// `ϱ_prev → ϱ` driven by `u`.
pub fn renormalized_residual(
    scheme: &Scheme,
    rho_prev: &Field,
    rho: &Field,
    u: &Field,
    kind: Renormalization,
) -> Result<RenormalizedTerms, AnalysisError> {
    rho_prev.require(SpaceKind::Q)?;
    rho.require(SpaceKind::Q)?;
    u.require(SpaceKind::V)?;
    let mesh = scheme.mesh();
    let areas = mesh.areas();
    let dt = scheme.dt();
    let (old, new) = (rho_prev.values(), rho.values());
    let div = u.divergence()?;

    let mut terms = RenormalizedTerms {
        kind,
        b_new: 0.0,
        b_old: 0.0,
        div_term: 0.0,
        time_diffusion: 0.0,
        face_diffusion: 0.0,
    };
    for e in 0..mesh.num_elements() {
        terms.b_new += areas[e] * kind.b(new[e]);
        terms.b_old += areas[e] * kind.b(old[e]);
        terms.div_term += dt * areas[e] * kind.pressure_like(new[e]) * div[e];
    }
    if kind == Renormalization::Square {
        for e in 0..mesh.num_elements() {
            terms.time_diffusion += areas[e] * (new[e] - old[e]).powi(2);
        }
        let v = u.space();
        for (dof, g) in u.values().iter().enumerate() {
            let face = &mesh.faces()[v.entity(dof)];
            if let (Some(m), Some(p)) = (face.minus, face.plus) {
                terms.face_diffusion += dt * g.abs() * (new[m] - new[p]).powi(2);
            }
        }
    }
    Ok(terms)
}

/// A smooth space-time test function with its time derivative and spatial
/// gradient.
pub struct TestFunction<'a> {
    pub value: Box<dyn Fn(f64, Point) -> f64 + 'a>,
    pub grad: Box<dyn Fn(f64, Point) -> [f64; 2] + 'a>,
}

impl<'a> TestFunction<'a> {
    pub fn new(
        value: impl Fn(f64, Point) -> f64 + 'a,
        grad: impl Fn(f64, Point) -> [f64; 2] + 'a,
    ) -> Self {
        Self {
            value: Box::new(value),
            grad: Box::new(grad),
        }
    }
}

/// `∫∫ ϱ (∂_t φ + u·∇φ) + ∫ ϱ⁰ φ(0)` for the piecewise constant in time
/// extension of the trajectory, with `ϱ⁰` the discrete initial density.
pub fn weak_continuity_residual(trajectory: &Trajectory, phi: &TestFunction) -> f64 {
    let mesh = trajectory.scheme.mesh();
    let states = &trajectory.states;
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        total += states[0].rho.values()[e]
            * quadrature::integrate_element(mesh, e, |x| (phi.value)(states[0].time, x));
    }
    for pair in states.windows(2) {
        let (t0, t1) = (pair[0].time, pair[1].time);
        let state = &pair[1];
        let rho = state.rho.values();
        for e in 0..mesh.num_elements() {
            let integral = quadrature::integrate_element(mesh, e, |x| {
                let dphi = (phi.value)(t1, x) - (phi.value)(t0, x);
                let u = state.u.vector_at(e, x);
                let transport: f64 = quadrature::LINE
                    .iter()
                    .map(|&(s, w)| {
                        let g = (phi.grad)(t0 + s * (t1 - t0), x);
                        w * (u[0] * g[0] + u[1] * g[1])
                    })
                    .sum();
                dphi + (t1 - t0) * transport
            });
            total += rho[e] * integral;
        }
    }
    total
}
