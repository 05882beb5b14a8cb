//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use mcnsfv_core::mesh::GaussLegendre;
use mcnsfv_core::{DataSample, ExperimentId, FluidParams, State, TorusMesh};

/// Projected vortex initial state and its parameters on an `n x n` mesh.
pub fn vortex_case(n: usize) -> (State, FluidParams) {
    let mesh = Arc::new(TorusMesh::new(n, 2).expect("valid mesh"));
    let sample = DataSample::with_perturbations(ExperimentId::Vortex, [0.05, 0.02, -0.03]);
    let state = sample
        .initial_state(&mesh, &GaussLegendre::default())
        .expect("finite data");
    let params = sample
        .fluid_params(&mesh, 1.0, 1.4)
        .expect("valid parameters");
    (state, params)
}
