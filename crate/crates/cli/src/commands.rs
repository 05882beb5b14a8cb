use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mcnsfv_core::field::total_energy;
use mcnsfv_core::mc::persist::{write_atomic, MANIFEST_FILE};
use mcnsfv_core::mc::{
    error_metrics, load_ensemble, load_reference, read_metrics_csv, run_ensemble, save_ensemble,
    save_reference, slope_fit, write_metrics_csv, Ensemble, MetricRow, ReferenceStats, RunSetup,
    Unknown,
};
use mcnsfv_core::random_data::REFERENCE_REALISATION;
use mcnsfv_core::scheme::{energy_ledger_check, LEDGER_TOLERANCE};
use mcnsfv_core::verify::{conservation_drift, run_suite, SuiteOptions, SuiteReport};
use mcnsfv_core::{Error as CoreError, TorusMesh};

use crate::config::RunConfig;
use crate::error::CliError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const RATES_FILE: &str = "rates.csv";

pub fn run_setup(cfg: &RunConfig) -> Result<RunSetup, CliError> {
    let mesh = Arc::new(TorusMesh::new(cfg.n, cfg.d)?);
    Ok(RunSetup {
        model: cfg.model()?,
        mesh,
        scheme: cfg.scheme(),
        a: cfg.a,
        gamma: cfg.gamma,
    })
}

pub fn reference_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("reference")
}

pub fn ensemble_dir(cfg: &RunConfig, realisation: u64) -> PathBuf {
    cfg.out.join("ensembles").join(format!("r{realisation:03}"))
}

pub fn sample_dir(cfg: &RunConfig, index: u64) -> PathBuf {
    cfg.out.join("samples").join(format!("sample_{index:06}"))
}

fn input_error(e: CoreError) -> CliError {
    match e {
        CoreError::ConfigMismatch => {
            CliError::Input("stored data was produced by a different configuration".into())
        }
        other => CliError::from(other),
    }
}

#[derive(Debug, Clone)]
pub struct SampleSummary {
    pub path: PathBuf,
    pub steps: usize,
    pub energy_drift: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub min_density: f64,
    /// `None` when a body force makes the ledger inapplicable.
    pub ledger_min_slack: Option<f64>,
}

impl std::fmt::Display for SampleSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "steps {}, energy drift {:e}, mass drift {:e}, momentum drift {:e}, min density {:e}",
            self.steps, self.energy_drift, self.mass_drift, self.momentum_drift, self.min_density
        )?;
        match self.ledger_min_slack {
            Some(s) => write!(f, ", ledger min slack {s:e}"),
            None => write!(f, ", ledger skipped (body force)"),
        }
    }
}

/// Solves one sample of realisation 0 and stores its terminal state.
pub fn run_sample(cfg: &RunConfig, index: u64) -> Result<SampleSummary, CliError> {
    let setup = run_setup(cfg)?;
    let traj = setup.solve_sample(index, 0)?;
    let sample = setup.model.draw_sample(index, 0);
    let params = sample.fluid_params(&setup.mesh, setup.a, setup.gamma)?;

    let (mass_drift, momentum_drift) = conservation_drift(&traj);
    let e_end = total_energy(traj.final_state(), &params.eos)?;
    let min_density = traj
        .states
        .iter()
        .map(|s| s.min_density())
        .fold(f64::INFINITY, f64::min);
    let ledger_min_slack = if params.g.is_none() {
        Some(energy_ledger_check(&traj, &params, LEDGER_TOLERANCE)?.min_slack())
    } else {
        None
    };

    let manifest = setup.manifest(0, vec![index], Vec::new());
    let ens = Ensemble::from_parts(
        manifest,
        vec![index],
        vec![traj.final_state().clone()],
        Vec::new(),
    )?;
    let dir = sample_dir(cfg, index);
    save_ensemble(&ens, &dir)?;
    Ok(SampleSummary {
        path: dir,
        steps: traj.num_steps(),
        energy_drift: e_end - traj.initial_energy,
        mass_drift,
        momentum_drift,
        min_density,
        ledger_min_slack,
    })
}

/// Builds and stores the reference statistics from `S` samples drawn on a
/// stream disjoint from every test realisation.
pub fn reference(cfg: &RunConfig) -> Result<(ReferenceStats, PathBuf), CliError> {
    let setup = run_setup(cfg)?;
    let ens = run_ensemble(&setup, cfg.reference_samples, REFERENCE_REALISATION)?;
    for f in ens.failures() {
        eprintln!(
            "warning: reference sample {} failed: {}",
            f.sample_id, f.reason
        );
    }
    let stats = ReferenceStats::from_states(ens.states())?;
    let dir = reference_dir(cfg);
    save_reference(&stats, ens.manifest(), &dir)?;
    Ok((stats, dir))
}

/// Loads realisation `m` if a matching copy is stored, otherwise solves and
/// stores it.
fn ensemble_for(cfg: &RunConfig, setup: &RunSetup, m: u64) -> Result<Ensemble, CliError> {
    let size = *cfg.sample_sizes.last().expect("validated nonempty");
    let dir = ensemble_dir(cfg, m);
    if dir.join(MANIFEST_FILE).exists() {
        let ens = load_ensemble(&dir, &setup.mesh).map_err(input_error)?;
        ens.manifest().check_config(setup).map_err(input_error)?;
        if ens.manifest().realisation == m && ens.manifest().sample_ids.len() == size {
            return Ok(ens);
        }
    }
    let ens = run_ensemble(setup, size, m)?;
    for f in ens.failures() {
        eprintln!(
            "warning: realisation {m} sample {} failed: {}",
            f.sample_id, f.reason
        );
    }
    save_ensemble(&ens, &dir)?;
    Ok(ens)
}

/// Ensemble phase: solves and stores the `M` realisations of size `max N`.
pub fn mc(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let setup = run_setup(cfg)?;
    (0..cfg.realisations as u64)
        .map(|m| ensemble_for(cfg, &setup, m).map(|_| ensemble_dir(cfg, m)))
        .collect()
}

/// Computes E1–E4 for every unknown and ensemble size and writes the
/// metrics table. Ensembles of size `N` are the first `N` samples of each
/// realisation.
pub fn estimate(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let setup = run_setup(cfg)?;
    let ref_dir = reference_dir(cfg);
    if !ref_dir.join(MANIFEST_FILE).exists() {
        return Err(CliError::Input(format!(
            "reference not found in {} (run `mcnsfv reference` first)",
            ref_dir.display()
        )));
    }
    let (stats, ref_manifest) = load_reference(&ref_dir, &setup.mesh).map_err(input_error)?;
    ref_manifest.check_config(&setup).map_err(input_error)?;

    let ensembles = (0..cfg.realisations as u64)
        .map(|m| ensemble_for(cfg, &setup, m))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for unknown in Unknown::ALL {
        let mut per_n = Vec::new();
        for &n in &cfg.sample_sizes {
            let prefixes: Vec<_> = ensembles.iter().map(|e| e.leading(n as u64)).collect();
            per_n.push((n, error_metrics(&prefixes, &stats, unknown, cfg.gamma)?));
        }
        for metric in 0..4 {
            for (n, em) in &per_n {
                let (name, value) = em.as_array()[metric];
                rows.push(MetricRow {
                    experiment: cfg.experiment.to_string(),
                    field: unknown.name().to_string(),
                    metric: name.to_string(),
                    p: unknown.exponent(cfg.gamma),
                    n: *n,
                    m: cfg.realisations,
                    s: stats.samples,
                    value,
                });
            }
        }
    }
    let path = cfg.out.join(METRICS_FILE);
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", cfg.out.display())))?;
    write_metrics_csv(&path, &rows)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub field: String,
    pub metric: String,
    pub slope: f64,
    pub residual: f64,
}

/// Fits `log E` against `log N` for every (field, metric) of a metrics table.
pub fn fit_rates(rows: &[MetricRow]) -> Result<Vec<RateRow>, CliError> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let key = (r.field.clone(), r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(field, metric)| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.field == field && r.metric == metric)
                .map(|r| (r.n as f64, r.value))
                .collect();
            let fit =
                slope_fit(&pts).map_err(|e| CliError::Input(format!("{field}/{metric}: {e}")))?;
            Ok(RateRow {
                field,
                metric,
                slope: fit.slope,
                residual: fit.residual,
            })
        })
        .collect()
}

pub fn write_rates_csv(path: &Path, rates: &[RateRow]) -> Result<(), CliError> {
    let mut s = String::from("field,metric,slope,residual\n");
    for r in rates {
        let _ = writeln!(s, "{},{},{},{}", r.field, r.metric, r.slope, r.residual);
    }
    write_atomic(path, s.as_bytes())?;
    Ok(())
}

pub fn convergence(cfg: &RunConfig) -> Result<(Vec<RateRow>, PathBuf), CliError> {
    let metrics = cfg.out.join(METRICS_FILE);
    if !metrics.exists() {
        return Err(CliError::Input(format!(
            "metrics not found at {} (run `mcnsfv estimate` first)",
            metrics.display()
        )));
    }
    let rows = read_metrics_csv(&metrics)?;
    let rates = fit_rates(&rows)?;
    let path = cfg.out.join(RATES_FILE);
    write_rates_csv(&path, &rates)?;
    Ok((rates, path))
}

pub fn verify(cfg: &RunConfig, mutate_flux_sign: bool) -> Result<SuiteReport, CliError> {
    let opts = SuiteOptions {
        n: cfg.n.min(32),
        seed: cfg.seed,
        mutate_flux_sign,
        ..SuiteOptions::default()
    };
    Ok(run_suite(&opts)?)
}
