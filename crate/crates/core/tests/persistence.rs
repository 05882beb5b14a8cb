use std::fs;
use std::sync::Arc;

use mcnsfv_core::mc::persist::{decode_fvf, sample_file_name, MANIFEST_FILE};
use mcnsfv_core::mc::{
    load_ensemble, load_reference, read_metrics_csv, run_ensemble, save_ensemble, save_reference,
    write_metrics_csv, Manifest, MetricRow, ReferenceStats, RunSetup,
};
use mcnsfv_core::{Error, ExperimentId, ExperimentModel, SchemeConfig, TorusMesh};

fn setup(n: usize) -> RunSetup {
    let scheme = SchemeConfig {
        final_time: 0.02,
        ..SchemeConfig::default()
    };
    RunSetup {
        model: ExperimentModel::new(ExperimentId::Vortex, 0.1, 5).unwrap(),
        mesh: Arc::new(TorusMesh::new(n, 2).unwrap()),
        scheme,
        a: 1.0,
        gamma: 1.4,
    }
}

#[test]
fn ensemble_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(8);
    let ens = run_ensemble(&s, 3, 0).unwrap();
    save_ensemble(&ens, dir.path()).unwrap();
    let back = load_ensemble(dir.path(), &s.mesh).unwrap();
    assert_eq!(back.sample_ids(), ens.sample_ids());
    for (a, b) in ens.states().iter().zip(back.states()) {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a.rho.values()), bits(b.rho.values()));
        assert_eq!(bits(a.mom.values()), bits(b.mom.values()));
    }
    let manifest = Manifest::load(dir.path()).unwrap();
    manifest.check_config(&s).unwrap();
    assert_eq!(manifest.sample_ids, vec![0, 1, 2]);
    assert_eq!(manifest.payload_checksums.len(), 3);
}

#[test]
fn manifest_uses_documented_keys() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(4);
    save_ensemble(&run_ensemble(&s, 1, 0).unwrap(), dir.path()).unwrap();
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    for key in [
        "format_version",
        "experiment",
        "n",
        "dt_factor",
        "epsilon",
        "gamma",
        "a",
        "mu",
        "lambda",
        "T",
        "seed",
        "realisation",
        "sample_ids",
        "failed_ids",
        "payload_checksums",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["experiment"], "vortex");
}

#[test]
fn corrupted_payload_names_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(4);
    save_ensemble(&run_ensemble(&s, 3, 0).unwrap(), dir.path()).unwrap();
    let victim = dir.path().join(sample_file_name(1));
    let mut bytes = fs::read(&victim).unwrap();
    bytes[40] ^= 0x01;
    fs::write(&victim, bytes).unwrap();
    match load_ensemble(dir.path(), &s.mesh) {
        Err(Error::ChecksumMismatch { sample_id, .. }) => assert_eq!(sample_id, 1),
        other => panic!("expected a checksum failure, got {other:?}"),
    }
}

#[test]
fn truncated_payload_fails_checksum_then_format() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(4);
    save_ensemble(&run_ensemble(&s, 1, 0).unwrap(), dir.path()).unwrap();
    let victim = dir.path().join(sample_file_name(0));
    let bytes = fs::read(&victim).unwrap();
    fs::write(&victim, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(
        load_ensemble(dir.path(), &s.mesh),
        Err(Error::ChecksumMismatch { sample_id: 0, .. })
    ));
    assert!(matches!(
        decode_fvf(&bytes[..bytes.len() - 8], &victim),
        Err(Error::Format { .. })
    ));
}

#[test]
fn mesh_mismatch_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(4);
    save_ensemble(&run_ensemble(&s, 1, 0).unwrap(), dir.path()).unwrap();
    let other = Arc::new(TorusMesh::new(8, 2).unwrap());
    assert!(matches!(
        load_ensemble(dir.path(), &other),
        Err(Error::MeshMismatch {
            expected_n: 8,
            found_n: 4,
            ..
        })
    ));
}

#[test]
fn config_change_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(4);
    save_ensemble(&run_ensemble(&s, 1, 0).unwrap(), dir.path()).unwrap();
    let mut changed = s.clone();
    changed.model.half_width = 0.05;
    let manifest = Manifest::load(dir.path()).unwrap();
    assert!(matches!(
        manifest.check_config(&changed),
        Err(Error::ConfigMismatch)
    ));
}

#[test]
fn reference_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = setup(4);
    let ens = run_ensemble(&s, 3, u64::MAX).unwrap();
    let stats = ReferenceStats::from_states(ens.states()).unwrap();
    save_reference(&stats, ens.manifest(), dir.path()).unwrap();
    let (back, manifest) = load_reference(dir.path(), &s.mesh).unwrap();
    assert_eq!(back, stats);
    assert_eq!(manifest.realisation, u64::MAX);

    let victim = dir.path().join("var_u.fvf");
    let mut bytes = fs::read(&victim).unwrap();
    bytes[25] ^= 0x10;
    fs::write(&victim, bytes).unwrap();
    assert!(matches!(
        load_reference(dir.path(), &s.mesh),
        Err(Error::PayloadChecksum(_))
    ));
}

#[test]
fn metrics_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("metrics.csv");
    let rows: Vec<MetricRow> = [5, 10, 20]
        .iter()
        .map(|&n| MetricRow {
            experiment: "steady_state".into(),
            field: "rho".into(),
            metric: "E1".into(),
            p: 1.4,
            n,
            m: 10,
            s: 512,
            value: 0.1 / (n as f64).sqrt(),
        })
        .collect();
    write_metrics_csv(&path, &rows).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("experiment,field,metric,p,N,M,S,value\n"));
    assert_eq!(read_metrics_csv(&path).unwrap(), rows);
}
