use std::sync::Arc;

use rayon::prelude::*;

use super::persist::{Manifest, MANIFEST_VERSION};
use crate::error::{Error, Result};
use crate::field::{State, Trajectory};
use crate::mesh::{GaussLegendre, TorusMesh};
use crate::random_data::ExperimentModel;
use crate::scheme::{solve_trajectory, SchemeConfig};

/// Everything needed to turn a sample index into a trajectory.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub model: ExperimentModel,
    pub mesh: Arc<TorusMesh>,
    pub scheme: SchemeConfig,
    pub a: f64,
    pub gamma: f64,
}

impl RunSetup {
    pub fn solve_sample(&self, index: u64, realisation: u64) -> Result<Trajectory> {
        let sample = self.model.draw_sample(index, realisation);
        let quad = GaussLegendre::new(self.scheme.quadrature_points);
        let initial = sample.initial_state(&self.mesh, &quad)?;
        let params = sample.fluid_params(&self.mesh, self.a, self.gamma)?;
        solve_trajectory(initial, &params, &self.scheme)
    }

    pub fn manifest(
        &self,
        realisation: u64,
        sample_ids: Vec<u64>,
        failed_ids: Vec<u64>,
    ) -> Manifest {
        Manifest {
            format_version: MANIFEST_VERSION,
            experiment: self.model.experiment.as_str().to_string(),
            d: self.mesh.dim(),
            n: self.mesh.cells_per_axis(),
            dt_factor: self.scheme.dt_factor,
            epsilon: self.scheme.epsilon,
            gamma: self.gamma,
            a: self.a,
            mu: self.model.mu,
            lambda: self.model.lambda,
            final_time: self.scheme.final_time,
            half_width: self.model.half_width,
            g: self.model.g.clone(),
            seed: self.model.base_seed,
            realisation,
            sample_ids,
            failed_ids,
            payload_checksums: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFailure {
    pub sample_id: u64,
    pub reason: String,
}

/// Sealed set of terminal states of one realisation, in sample order.
#[derive(Debug, Clone)]
pub struct Ensemble {
    manifest: Manifest,
    ids: Vec<u64>,
    states: Vec<State>,
    failures: Vec<SampleFailure>,
}

impl Ensemble {
    /// Seals a set of solved samples. `ids` and `states` are parallel and in
    /// increasing index order; `manifest` lists every attempted index.
    pub fn from_parts(
        manifest: Manifest,
        ids: Vec<u64>,
        states: Vec<State>,
        failures: Vec<SampleFailure>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::AllSamplesFailed(manifest.sample_ids.len()));
        }
        if ids.len() + manifest.failed_ids.len() != manifest.sample_ids.len() {
            return Err(Error::Estimator(format!(
                "manifest lists {} samples and {} failures but {} states are present",
                manifest.sample_ids.len(),
                manifest.failed_ids.len(),
                ids.len()
            )));
        }
        Ok(Self {
            manifest,
            ids,
            states,
            failures,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Indices of the samples that produced a state.
    pub fn sample_ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    /// Failures observed while solving; empty for ensembles loaded from disk,
    /// whose manifest keeps only the failed indices.
    pub fn failures(&self) -> &[SampleFailure] {
        &self.failures
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States of the samples with index below `count`: the ensemble of
    /// size `count` nested inside this one.
    pub fn leading(&self, count: u64) -> &[State] {
        let k = self.ids.partition_point(|&id| id < count);
        &self.states[..k]
    }
}

/// Solves samples `0..count` of realisation `realisation`.
pub fn run_ensemble(setup: &RunSetup, count: usize, realisation: u64) -> Result<Ensemble> {
    run_ensemble_with_faults(setup, count, realisation, &[])
}

/// As [`run_ensemble`], but the samples listed in `faults` fail as if the
/// solver had broken down; used to exercise failure accounting.
pub fn run_ensemble_with_faults(
    setup: &RunSetup,
    count: usize,
    realisation: u64,
    faults: &[u64],
) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::param("N", "ensemble size must be at least 1"));
    }
    setup.scheme.validate()?;
    // Results come back in index order whatever the scheduling.
    let outcomes: Vec<(u64, Result<State>)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let res = if faults.contains(&i) {
                Err(Error::SolverFailure {
                    time: 0.0,
                    reason: "injected fault".into(),
                    iterations: 0,
                    residual: f64::NAN,
                })
            } else {
                setup.solve_sample(i, realisation).map(|t| {
                    t.states
                        .into_iter()
                        .next_back()
                        .expect("trajectory has a state")
                })
            };
            (i, res)
        })
        .collect();

    let mut ids = Vec::new();
    let mut states = Vec::new();
    let mut failures = Vec::new();
    for (i, res) in outcomes {
        match res {
            Ok(s) => {
                ids.push(i);
                states.push(s);
            }
            Err(e) => failures.push(SampleFailure {
                sample_id: i,
                reason: e.to_string(),
            }),
        }
    }
    if states.is_empty() {
        return Err(Error::AllSamplesFailed(count));
    }
    let manifest = setup.manifest(
        realisation,
        (0..count as u64).collect(),
        failures.iter().map(|f| f.sample_id).collect(),
    );
    Ensemble::from_parts(manifest, ids, states, failures)
}
