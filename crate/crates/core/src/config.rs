//! Run configuration.
//!
//! Configurations are TOML files with the sections `[physics]`, `[mesh]`,
//! `[time]`, `[initial]` and `[solver]`:
//!
//! ```toml
//! [physics]
//! mu = 1.0          # shear viscosity, > 0
//! lambda = 0.0      # bulk viscosity, 2 lambda + 2 mu >= 0        (default 0)
//! a = 1.0           # pressure constant, p = a rho^gamma, > 0
//! gamma = 1.5       # adiabatic exponent, > 1
//!
//! [mesh]
//! nx = 16
//! ny = 16           # default: nx
//! x_min = 0.0       # bounds default to the unit square
//! x_max = 1.0
//! y_min = 0.0
//! y_max = 1.0
//!
//! [time]
//! t_final = 0.5
//! kappa = 0.5       # dt = kappa h, adjusted so that M dt = t_final (default 0.5)
//!
//! [initial]
//! rho = "1 + 0.2*sin(pi*x)*sin(pi*y)"
//! ux = "0"          # default "0"
//! uy = "0"          # default "0"
//!
//! [solver]
//! picard_tol = 1e-10     # relative increment tolerance (default 1e-10)
//! picard_max_iter = 500  # (default 500)
//! damping = 1.0          # initial Picard relaxation in (0, 1] (default 1)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::mesh::Rect;

/// Spatial dimension.
pub const DIM: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid parameter `{parameter}` = {value}: {condition} required")]
    Constraint {
        parameter: &'static str,
        value: String,
        condition: &'static str,
    },
    #[error("initial `{field}`: {source}")]
    Expression {
        field: &'static str,
        #[source]
        source: ExprError,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    pub a: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default = "zero")]
    pub x_min: f64,
    #[serde(default = "one")]
    pub x_max: f64,
    #[serde(default = "zero")]
    pub y_min: f64,
    #[serde(default = "one")]
    pub y_max: f64,
}

impl MeshConfig {
    pub fn ny(&self) -> usize {
        self.ny.unwrap_or(self.nx)
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub rho: String,
    #[serde(default = "zero_expr")]
    pub ux: String,
    #[serde(default = "zero_expr")]
    pub uy: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default = "one")]
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            picard_tol: default_picard_tol(),
            picard_max_iter: default_picard_max_iter(),
            damping: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub physics: Physics,
    pub mesh: MeshConfig,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

fn default_kappa() -> f64 {
    0.5
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn default_picard_max_iter() -> usize {
    500
}

fn zero_expr() -> String {
    "0".to_string()
}

/// Parsed initial data.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub rho: Expr,
    pub ux: Expr,
    pub uy: Expr,
}

fn constraint(
    parameter: &'static str,
    value: impl ToString,
    condition: &'static str,
) -> ConfigError {
    ConfigError::Constraint {
        parameter,
        value: value.to_string(),
        condition,
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.physics;
        if !(p.mu > 0.0) {
            return Err(constraint("mu", p.mu, "μ > 0"));
        }
        if !(DIM * p.lambda + 2.0 * p.mu >= 0.0) {
            return Err(constraint("lambda", p.lambda, "Nλ + 2μ ≥ 0"));
        }
        if !(p.a > 0.0) {
            return Err(constraint("a", p.a, "a > 0"));
        }
        if !(p.gamma > DIM / 2.0) || !p.gamma.is_finite() {
            return Err(constraint("gamma", p.gamma, "γ > N/2"));
        }
        let m = &self.mesh;
        if m.nx == 0 {
            return Err(constraint("nx", m.nx, "nx ≥ 1"));
        }
        if m.ny() == 0 {
            return Err(constraint("ny", m.ny(), "ny ≥ 1"));
        }
        if !(m.x_max > m.x_min) {
            return Err(constraint("x_max", m.x_max, "x_max > x_min"));
        }
        if !(m.y_max > m.y_min) {
            return Err(constraint("y_max", m.y_max, "y_max > y_min"));
        }
        let t = &self.time;
        if !(t.kappa > 0.0) {
            return Err(constraint("kappa", t.kappa, "κ > 0"));
        }
        if !(t.t_final >= 0.0) || !t.t_final.is_finite() {
            return Err(constraint("t_final", t.t_final, "T ≥ 0"));
        }
        let s = &self.solver;
        if !(s.picard_tol > 0.0) {
            return Err(constraint("picard_tol", s.picard_tol, "picard_tol > 0"));
        }
        if s.picard_max_iter == 0 {
            return Err(constraint(
                "picard_max_iter",
                s.picard_max_iter,
                "picard_max_iter ≥ 1",
            ));
        }
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(constraint("damping", s.damping, "0 < damping ≤ 1"));
        }
        self.initial_data()?;
        Ok(())
    }

    pub fn initial_data(&self) -> Result<InitialData, ConfigError> {
        let parse = |field: &'static str, text: &str| {
            Expr::parse(text).map_err(|source| ConfigError::Expression { field, source })
        };
        Ok(InitialData {
            rho: parse("rho", &self.initial.rho)?,
            ux: parse("ux", &self.initial.ux)?,
            uy: parse("uy", &self.initial.uy)?,
        })
    }
}
