//! Implicit upwind finite-volume scheme for the barotropic Navier-Stokes
//! system, its nonlinear solver, and the structure-preservation checks.

mod assembly;
mod flux;
mod ledger;
mod linear;
mod newton;
mod stepper;

pub use assembly::{residual, Assembler};
pub use flux::upwind_flux;
pub use ledger::LEDGER_TOLERANCE;
pub use ledger::{energy_ledger_check, LedgerReport};
pub use linear::{BlockMatrix, LinearSolverKind};
pub use newton::{NewtonOutcome, NewtonSolver};
pub(crate) use stepper::solve_trajectory_with;
pub use stepper::{solve_trajectory, step, time_levels, StepResult};

use crate::error::{Error, Result};
use crate::field::{Eos, Field};

/// Physical parameters of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidParams {
    pub mu: f64,
    pub lambda: f64,
    pub eos: Eos,
    /// Projected body force; `None` means `g = 0`.
    pub g: Option<Field>,
}

/// Lower bound on the shear viscosity accepted by [`FluidParams::new`].
pub const MU_LOWER: f64 = 1e-12;

impl FluidParams {
    pub fn new(mu: f64, lambda: f64, a: f64, gamma: f64, g: Option<Field>) -> Result<Self> {
        if !(mu >= MU_LOWER && mu.is_finite()) {
            return Err(Error::param("mu", format!("must be positive, got {mu}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::param(
                "lambda",
                format!("must be >= 0, got {lambda}"),
            ));
        }
        if let Some(g) = &g {
            if g.components() != g.mesh().dim() {
                return Err(Error::param("g", "body force must be a vector field"));
            }
        }
        Ok(Self {
            mu,
            lambda,
            eos: Eos::new(a, gamma)?,
            g,
        })
    }

    /// `η = (d-2)/d μ + λ`.
    pub fn eta(&self, d: usize) -> f64 {
        (d as f64 - 2.0) / d as f64 * self.mu + self.lambda
    }
}

/// Nonlinear solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    pub max_dt_halvings: u32,
    pub linear: LinearSolverKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_abs: 1e-11,
            tol_rel: 1e-10,
            max_iters: 30,
            max_dt_halvings: 6,
            linear: LinearSolverKind::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    /// Exponent of the artificial diffusion `h^ε`.
    pub epsilon: f64,
    /// `Δt = dt_factor · h`.
    pub dt_factor: f64,
    pub final_time: f64,
    pub solver: SolverConfig,
    /// Gauss points per axis used to project initial data.
    pub quadrature_points: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.6,
            dt_factor: 1.0,
            final_time: 0.1,
            solver: SolverConfig::default(),
            quadrature_points: 3,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > -1.0 && self.epsilon.is_finite()) {
            return Err(Error::param(
                "epsilon",
                format!("must satisfy -1 < epsilon, got {}", self.epsilon),
            ));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor.is_finite()) {
            return Err(Error::param(
                "dt_factor",
                format!("must be positive, got {}", self.dt_factor),
            ));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::param(
                "T",
                format!("must be positive, got {}", self.final_time),
            ));
        }
        if !(self.solver.tol_abs > 0.0 && self.solver.tol_rel > 0.0) {
            return Err(Error::param(
                "tolerance",
                "solver tolerances must be positive",
            ));
        }
        if self.solver.max_iters == 0 {
            return Err(Error::param("max_iters", "must be positive"));
        }
        if self.quadrature_points == 0 {
            return Err(Error::param("quadrature", "need at least one point"));
        }
        Ok(())
    }

    pub fn dt(&self, h: f64) -> f64 {
        self.dt_factor * h
    }
}
