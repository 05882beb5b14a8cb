//! Piecewise-constant fields on a [`TorusMesh`], the discrete operators
//! acting on them, norms, and the energy functionals.

mod energy;
pub(crate) mod norms;
mod ops;

pub use energy::{relative_energy, total_energy, Eos};
pub use norms::{
    bochner_norm, inner_product_l2, linf_norm, lp_norm, neg_sobolev_norm, w12_seminorm,
};
pub use ops::{avg, div_h, grad_d, jump, FaceData};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::TorusMesh;

/// Cells below this density are treated as a solver failure when velocities
/// are recovered from momenta.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Scalar (`components == 1`) or vector (`components == d`) cell data.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Arc<TorusMesh>,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(mesh: Arc<TorusMesh>, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::param("components", "must be positive"));
        }
        let expected = mesh.num_cells() * components;
        if values.len() != expected {
            return Err(Error::param(
                "values",
                format!("expected {expected} entries, found {}", values.len()),
            ));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                value: *v,
                context: format!("cell {} component {}", i / components, i % components),
            });
        }
        Ok(Self {
            mesh,
            components,
            values,
        })
    }

    /// Skips the finiteness scan; callers guarantee the invariants.
    pub(crate) fn from_raw(mesh: Arc<TorusMesh>, components: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.num_cells() * components);
        Self {
            mesh,
            components,
            values,
        }
    }

    pub fn zeros(mesh: Arc<TorusMesh>, components: usize) -> Self {
        let len = mesh.num_cells() * components;
        Self::from_raw(mesh, components, vec![0.0; len])
    }

    /// Field with the same value `c` (one entry per component) in every cell.
    pub fn constant(mesh: Arc<TorusMesh>, c: &[f64]) -> Result<Self> {
        let values = c.repeat(mesh.num_cells());
        Self::from_values(mesh, c.len(), values)
    }

    pub fn mesh(&self) -> &Arc<TorusMesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn cell(&self, k: usize) -> &[f64] {
        &self.values[k * self.components..(k + 1) * self.components]
    }

    /// Applies `f` entrywise; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(
            self.mesh.clone(),
            self.components,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &Field, beta: f64) -> Result<Self> {
        self.check_compatible(other)?;
        Self::from_values(
            self.mesh.clone(),
            self.components,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        self.map(|v| alpha * v)
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        self.mesh.check_same(&other.mesh)?;
        if self.components != other.components {
            return Err(Error::param(
                "components",
                format!("{} vs {}", self.components, other.components),
            ));
        }
        Ok(())
    }

    /// `Σ_K |K| v_K`, per component.
    pub fn integral(&self) -> Vec<f64> {
        let vol = self.mesh.cell_volume();
        let mut out = vec![0.0; self.components];
        for cell in self.values.chunks_exact(self.components) {
            for (o, v) in out.iter_mut().zip(cell) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o *= vol);
        out
    }

    /// Averages onto `coarse`, whose cells must each be a union of
    /// `(n / n_coarse)^d` cells of this field's mesh.
    pub fn coarsen(&self, coarse: &Arc<TorusMesh>) -> Result<Field> {
        let fine = &self.mesh;
        let (n, nc, d) = (fine.cells_per_axis(), coarse.cells_per_axis(), fine.dim());
        if coarse.dim() != d || nc == 0 || n % nc != 0 {
            return Err(Error::MeshMismatch {
                expected_d: d,
                expected_n: n,
                found_d: coarse.dim(),
                found_n: nc,
            });
        }
        let ratio = n / nc;
        let c = self.components;
        let mut out = vec![0.0; coarse.num_cells() * c];
        let mut idx = [0usize; 3];
        for k in 0..fine.num_cells() {
            let mi = fine.multi_index(k);
            for a in 0..d {
                idx[a] = mi[a] / ratio;
            }
            let kc = coarse.linear_index(&idx[..d]);
            for (o, v) in out[kc * c..(kc + 1) * c].iter_mut().zip(self.cell(k)) {
                *o += v;
            }
        }
        let inv = 1.0 / ratio.pow(d as u32) as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        Ok(Field::from_raw(coarse.clone(), c, out))
    }

    /// Cellwise Euclidean magnitude.
    pub fn magnitude(&self) -> Field {
        let values = self
            .values
            .chunks_exact(self.components)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        Field::from_raw(self.mesh.clone(), 1, values)
    }
}

/// Density and momentum at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: Field,
    pub mom: Field,
}

impl State {
    pub fn new(rho: Field, mom: Field) -> Result<Self> {
        rho.mesh().check_same(mom.mesh())?;
        if !rho.is_scalar() {
            return Err(Error::param("rho", "density must be a scalar field"));
        }
        if mom.components() != rho.mesh().dim() {
            return Err(Error::param("mom", "momentum must have d components"));
        }
        Ok(Self { rho, mom })
    }

    /// State with constant density and velocity.
    pub fn uniform(mesh: Arc<TorusMesh>, rho: f64, velocity: &[f64]) -> Result<Self> {
        let m: Vec<f64> = velocity.iter().map(|u| rho * u).collect();
        Self::new(
            Field::constant(mesh.clone(), &[rho])?,
            Field::constant(mesh, &m)?,
        )
    }

    pub fn mesh(&self) -> &Arc<TorusMesh> {
        self.rho.mesh()
    }

    /// `u_K = m_K / ϱ_K`; cells below [`DENSITY_FLOOR`] are an error.
    pub fn velocity(&self) -> Result<Field> {
        let d = self.mesh().dim();
        let mut values = Vec::with_capacity(self.mom.values().len());
        for (k, &rho) in self.rho.values().iter().enumerate() {
            if rho < DENSITY_FLOOR {
                return Err(Error::DensityFloor { cell: k, rho });
            }
            values.extend(self.mom.cell(k).iter().map(|m| m / rho));
        }
        Field::from_values(self.mesh().clone(), d, values)
    }

    /// Cell averages of density and momentum on a coarser nested mesh.
    pub fn coarsen(&self, coarse: &Arc<TorusMesh>) -> Result<Self> {
        Self::new(self.rho.coarsen(coarse)?, self.mom.coarsen(coarse)?)
    }

    pub fn total_mass(&self) -> f64 {
        self.rho.integral()[0]
    }

    pub fn total_momentum(&self) -> Vec<f64> {
        self.mom.integral()
    }

    pub fn min_density(&self) -> f64 {
        self.rho
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Interleaved `(ϱ, m_1, .., m_d)` per cell.
    pub fn to_interleaved(&self) -> Vec<f64> {
        let d = self.mesh().dim();
        let mut out = Vec::with_capacity(self.rho.values().len() * (d + 1));
        for k in 0..self.mesh().num_cells() {
            out.push(self.rho.values()[k]);
            out.extend_from_slice(self.mom.cell(k));
        }
        out
    }

    pub fn from_interleaved(mesh: Arc<TorusMesh>, data: &[f64]) -> Result<Self> {
        let d = mesh.dim();
        if data.len() != mesh.num_cells() * (d + 1) {
            return Err(Error::param("state", "interleaved length mismatch"));
        }
        let mut rho = Vec::with_capacity(mesh.num_cells());
        let mut mom = Vec::with_capacity(mesh.num_cells() * d);
        for chunk in data.chunks_exact(d + 1) {
            rho.push(chunk[0]);
            mom.extend_from_slice(&chunk[1..]);
        }
        Self::new(
            Field::from_values(mesh.clone(), 1, rho)?,
            Field::from_values(mesh, d, mom)?,
        )
    }
}

/// Per-step record kept alongside a [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    /// Length of the step that produced the state.
    pub dt: f64,
    /// Total energy of the new state.
    pub energy: f64,
    /// `μ‖∇_D u‖² + η‖div_h u‖²` at the new state.
    pub dissipation: f64,
    pub iterations: usize,
    pub residual: f64,
    pub min_density: f64,
    pub dt_halvings: u32,
}

/// Time levels `t_0 = 0 < t_1 < ... < t_K = T` with their states.
///
/// Read as piecewise constant in time: `states[k]` holds on
/// `[t_k, t_{k+1})`, so the initial state also covers the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `steps[k]` describes the step from `states[k]` to `states[k + 1]`.
    pub steps: Vec<StepDiagnostics>,
    /// Energy of `states[0]`.
    pub initial_energy: f64,
}

impl Trajectory {
    pub fn new(initial: State, initial_energy: f64) -> Self {
        Self {
            times: vec![0.0],
            states: vec![initial],
            steps: Vec::new(),
            initial_energy,
        }
    }

    pub fn push(&mut self, time: f64, state: State, diag: StepDiagnostics) {
        self.times.push(time);
        self.states.push(state);
        self.steps.push(diag);
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Piecewise-constant reading at time `t`.
    pub fn state_at(&self, t: f64) -> &State {
        let k = self.times.partition_point(|&tk| tk <= t).saturating_sub(1);
        &self.states[k.min(self.states.len() - 1)]
    }
}
