use std::sync::Arc;

use mcnsfv_core::mc::{mean_field, run_ensemble, run_ensemble_with_faults, RunSetup, Unknown};
use mcnsfv_core::{Error, ExperimentId, ExperimentModel, SchemeConfig, TorusMesh};

fn setup(experiment: ExperimentId, w: f64) -> RunSetup {
    let scheme = SchemeConfig {
        final_time: 0.05,
        ..SchemeConfig::default()
    };
    RunSetup {
        model: ExperimentModel::new(experiment, w, 12).unwrap(),
        mesh: Arc::new(TorusMesh::new(8, 2).unwrap()),
        scheme,
        a: 1.0,
        gamma: 1.4,
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn zero_perturbation_mean_is_steady_state() {
    let ens = run_ensemble(&setup(ExperimentId::SteadyState, 0.0), 1, 0).unwrap();
    let rho = mean_field(&Unknown::Rho.extract_all(ens.states()).unwrap()).unwrap();
    let m = mean_field(&Unknown::M.extract_all(ens.states()).unwrap()).unwrap();
    assert!(rho.values().iter().all(|&r| r == 1.0));
    assert!(m.values().iter().all(|&v| v == 0.0));
}

#[test]
fn worker_count_does_not_change_results() {
    let s = setup(ExperimentId::Vortex, 0.1);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&s, 5, 3).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.manifest(), b.manifest());
    for (x, y) in a.states().iter().zip(b.states()) {
        assert_eq!(bits(x.rho.values()), bits(y.rho.values()));
        assert_eq!(bits(x.mom.values()), bits(y.mom.values()));
    }
}

#[test]
fn failures_are_recorded_not_imputed() {
    let s = setup(ExperimentId::SteadyState, 0.1);
    let ens = run_ensemble_with_faults(&s, 5, 0, &[2]).unwrap();
    assert_eq!(ens.manifest().failed_ids, vec![2]);
    assert_eq!(ens.manifest().sample_ids, vec![0, 1, 2, 3, 4]);
    assert_eq!(ens.sample_ids(), &[0, 1, 3, 4]);
    assert_eq!(ens.len(), 4);
    assert_eq!(ens.failures()[0].sample_id, 2);
    assert_eq!(ens.leading(3).len(), 2);

    let err = run_ensemble_with_faults(&s, 2, 0, &[0, 1]).unwrap_err();
    assert!(matches!(err, Error::AllSamplesFailed(2)));
    assert!(run_ensemble(&s, 0, 0).is_err());
}

#[test]
fn nested_ensembles_share_leading_samples() {
    let s = setup(ExperimentId::SteadyState, 0.1);
    let big = run_ensemble(&s, 4, 1).unwrap();
    let small = run_ensemble(&s, 2, 1).unwrap();
    assert_eq!(big.leading(2), small.states());
}
