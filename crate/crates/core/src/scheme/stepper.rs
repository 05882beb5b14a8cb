use std::sync::Arc;

use super::assembly::Assembler;
use super::newton::NewtonSolver;
use super::{FluidParams, SchemeConfig};
use crate::error::{Error, Result};
use crate::field::norms::viscous_dissipation;
use crate::field::{total_energy, State, StepDiagnostics, Trajectory};
use crate::mesh::TorusMesh;

#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: State,
    pub diagnostics: StepDiagnostics,
}

/// Shared state for advancing one trajectory.
struct Stepper<'a> {
    mesh: Arc<TorusMesh>,
    params: &'a FluidParams,
    cfg: &'a SchemeConfig,
    solver: NewtonSolver,
}

/// One accepted (sub)step.
struct Substep {
    dt: f64,
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    depth: u32,
}

impl<'a> Stepper<'a> {
    fn new(mesh: Arc<TorusMesh>, params: &'a FluidParams, cfg: &'a SchemeConfig) -> Result<Self> {
        let asm = Assembler::new(mesh.clone(), params, cfg)?;
        Self::with_assembler(asm, params, cfg)
    }

    fn with_assembler(
        asm: Assembler,
        params: &'a FluidParams,
        cfg: &'a SchemeConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let mesh = asm.mesh().clone();
        let solver = NewtonSolver::new(asm, cfg.solver)?;
        Ok(Self {
            mesh,
            params,
            cfg,
            solver,
        })
    }

    /// Advances `x_old` by `dt`, splitting the interval in halves when Newton
    /// fails, down to `max_dt_halvings` levels.
    fn advance(
        &mut self,
        x_old: &[f64],
        dt: f64,
        depth: u32,
        t0: f64,
        out: &mut Vec<Substep>,
    ) -> Result<()> {
        match self.solver.solve(x_old, dt) {
            Ok((x, outcome)) => {
                out.push(Substep {
                    dt,
                    x,
                    iterations: outcome.iterations,
                    residual: outcome.residual,
                    depth,
                });
                Ok(())
            }
            Err(err) if depth < self.cfg.solver.max_dt_halvings => {
                let _ = err;
                let half = 0.5 * dt;
                self.advance(x_old, half, depth + 1, t0, out)?;
                let mid = out.last().expect("substep pushed").x.clone();
                self.advance(&mid, dt - half, depth + 1, t0 + half, out)
            }
            Err(Error::SolverFailure {
                reason,
                iterations,
                residual,
                ..
            }) => Err(Error::SolverFailure {
                time: t0 + dt,
                reason: format!("{reason} after {depth} time-step halvings"),
                iterations,
                residual,
            }),
            Err(other) => Err(other),
        }
    }

    fn diagnostics(&self, sub: &Substep) -> Result<(State, StepDiagnostics)> {
        let state = State::from_interleaved(self.mesh.clone(), &sub.x)?;
        let u = state.velocity()?;
        let d = self.mesh.dim();
        Ok((
            state.clone(),
            StepDiagnostics {
                dt: sub.dt,
                energy: total_energy(&state, &self.params.eos)?,
                dissipation: viscous_dissipation(&u, self.params.mu, self.params.eta(d)),
                iterations: sub.iterations,
                residual: sub.residual,
                min_density: state.min_density(),
                dt_halvings: sub.depth,
            },
        ))
    }
}

/// One implicit Euler step of length `cfg.dt(h)`.
///
/// If the step had to be split, the returned diagnostics aggregate the
/// substeps: `iterations` is the total, `dissipation` the `dt`-weighted
/// mean, and `dt_halvings` the deepest split.
pub fn step(s_old: &State, params: &FluidParams, cfg: &SchemeConfig) -> Result<StepResult> {
    let mesh = s_old.mesh().clone();
    let dt = cfg.dt(mesh.h());
    let mut stepper = Stepper::new(mesh, params, cfg)?;
    let mut subs = Vec::new();
    stepper.advance(&s_old.to_interleaved(), dt, 0, 0.0, &mut subs)?;
    let mut iterations = 0;
    let mut weighted = 0.0;
    let mut depth = 0;
    let mut residual: f64 = 0.0;
    let mut last = None;
    for sub in &subs {
        let (state, diag) = stepper.diagnostics(sub)?;
        iterations += diag.iterations;
        weighted += diag.dt * diag.dissipation;
        depth = depth.max(diag.dt_halvings);
        residual = residual.max(diag.residual);
        last = Some((state, diag));
    }
    let (state, diag) = last.expect("at least one substep");
    Ok(StepResult {
        state,
        diagnostics: StepDiagnostics {
            dt,
            dissipation: weighted / dt,
            iterations,
            residual,
            dt_halvings: depth,
            ..diag
        },
    })
}

/// Time levels `k Δt` up to `T`, with the last step truncated to land on `T`.
pub fn time_levels(final_time: f64, dt: f64) -> Vec<f64> {
    let steps = ((final_time / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut t: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();
    t.push(final_time);
    t
}

/// Solves from `initial` up to `cfg.final_time`. Steps split by the
/// non-convergence policy appear as separate entries.
pub fn solve_trajectory(
    initial: State,
    params: &FluidParams,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    let asm = Assembler::new(initial.mesh().clone(), params, cfg)?;
    solve_trajectory_with(initial, params, cfg, asm)
}

pub(crate) fn solve_trajectory_with(
    initial: State,
    params: &FluidParams,
    cfg: &SchemeConfig,
    asm: Assembler,
) -> Result<Trajectory> {
    let mesh = initial.mesh().clone();
    initial.mesh().check_same(asm.mesh())?;
    if let Some(k) = initial.rho.values().iter().position(|&r| !(r > 0.0)) {
        return Err(Error::DensityFloor {
            cell: k,
            rho: initial.rho.values()[k],
        });
    }
    let e0 = total_energy(&initial, &params.eos)?;
    let mut stepper = Stepper::with_assembler(asm, params, cfg)?;
    let levels = time_levels(cfg.final_time, cfg.dt(mesh.h()));
    let mut traj = Trajectory::new(initial, e0);
    let mut x = traj.states[0].to_interleaved();
    for window in levels.windows(2) {
        let mut subs = Vec::new();
        stepper.advance(&x, window[1] - window[0], 0, window[0], &mut subs)?;
        let mut t = window[0];
        let count = subs.len();
        for (i, sub) in subs.iter().enumerate() {
            t = if i + 1 == count {
                window[1]
            } else {
                t + sub.dt
            };
            let (state, diag) = stepper.diagnostics(sub)?;
            traj.push(t, state, diag);
        }
        x = subs.pop().expect("at least one substep").x;
    }
    Ok(traj)
}
