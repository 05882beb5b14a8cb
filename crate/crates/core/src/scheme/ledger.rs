use super::FluidParams;
use crate::error::{Error, Result};
use crate::field::norms::viscous_dissipation;
use crate::field::{total_energy, Trajectory};

/// Default tolerance on the per-step energy balance.
pub const LEDGER_TOLERANCE: f64 = 1e-9;

/// Per-step slack of the discrete energy balance
/// `E^k + Δt_k (μ‖∇_D u^k‖² + η‖div_h u^k‖²) <= E^{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    /// `slacks[k - 1]` belongs to step `k`.
    pub slacks: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub tolerance: f64,
}

impl LedgerReport {
    pub fn min_slack(&self) -> f64 {
        self.slacks.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// 1-based step numbers whose slack is below `-tolerance`.
    pub fn violations(&self) -> Vec<usize> {
        self.slacks
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < -self.tolerance)
            .map(|(k, _)| k + 1)
            .collect()
    }
}

/// Recomputes energies and dissipation from the stored states and checks
/// the balance step by step. Only meaningful without body force.
pub fn energy_ledger_check(
    traj: &Trajectory,
    params: &FluidParams,
    tolerance: f64,
) -> Result<LedgerReport> {
    if params
        .g
        .as_ref()
        .is_some_and(|g| g.values().iter().any(|&v| v != 0.0))
    {
        return Err(Error::param(
            "g",
            "the energy ledger applies only with zero body force",
        ));
    }
    let d = traj.states[0].mesh().dim();
    let eta = params.eta(d);
    let mut prev = total_energy(&traj.states[0], &params.eos)?;
    let mut slacks = Vec::with_capacity(traj.num_steps());
    let mut dissipation = Vec::with_capacity(traj.num_steps());
    for (k, window) in traj.times.windows(2).enumerate() {
        let state = &traj.states[k + 1];
        let energy = total_energy(state, &params.eos)?;
        let diss = viscous_dissipation(&state.velocity()?, params.mu, eta);
        slacks.push(prev - energy - (window[1] - window[0]) * diss);
        dissipation.push(diss);
        prev = energy;
    }
    let report = LedgerReport {
        slacks,
        dissipation,
        tolerance,
    };
    if let Some(&step) = report.violations().first() {
        return Err(Error::LedgerViolation {
            step,
            slack: report.slacks[step - 1],
        });
    }
    Ok(report)
}
