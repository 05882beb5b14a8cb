//! Desk-scale acceptance gate. Runs every criterion, prints one PASS/FAIL
//! line per criterion, and exits nonzero if any criterion fails. Plain
//! `main` (no libtest harness) so the report is never captured.
//!
//! `MCNSFV_ACCEPTANCE_ONLY=1,4,8` restricts the run to a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use mcnsfv_cli::commands::{self, fit_rates, RateRow};
use mcnsfv_cli::{with_pool, RunConfig};
use mcnsfv_core::field::relative_energy;
use mcnsfv_core::field::{avg, jump};
use mcnsfv_core::mc::{
    deviation_field, mean_field, read_metrics_csv, tensor_moment_error_l2, variance_field, RunSetup,
};
use mcnsfv_core::mesh::GaussLegendre;
use mcnsfv_core::random_data::rng_stream;
use mcnsfv_core::scheme::{energy_ledger_check, residual, upwind_flux};
use mcnsfv_core::verify::{conservation_drift, explicit_tensor_moment_error};
use mcnsfv_core::{DataSample, ExperimentId, Field, SchemeConfig, State, TorusMesh, Trajectory};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solve(
    experiment: ExperimentId,
    n: usize,
    index: u64,
    seed: u64,
) -> Result<(Trajectory, RunSetup), String> {
    let cfg = RunConfig {
        experiment,
        n,
        seed,
        ..RunConfig::default()
    };
    let setup = commands::run_setup(&cfg).map_err(|e| e.to_string())?;
    let traj = setup.solve_sample(index, 0).map_err(|e| e.to_string())?;
    Ok((traj, setup))
}

fn criterion_1() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut slowest = 0.0f64;
    for index in 0..3 {
        let start = Instant::now();
        let (traj, _) = solve(ExperimentId::SteadyState, 64, index, 1)?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let (dm, dp) = conservation_drift(&traj);
        worst = (worst.0.max(dm), worst.1.max(dp));
    }
    ensure(worst.0 <= 1e-9 && worst.1 <= 1e-9, || {
        format!("drift mass {:e}, momentum {:e}", worst.0, worst.1)
    })?;
    ensure(slowest < 10.0, || format!("slowest sample {slowest:.2} s"))?;
    Ok(format!(
        "mass drift {:.1e}, momentum drift {:.1e}, slowest sample {slowest:.2} s",
        worst.0, worst.1
    ))
}

/// Criteria 2 and 3 share the same 100 trajectories.
fn criteria_2_3() -> (Outcome, Outcome) {
    let experiments = [
        ExperimentId::SteadyState,
        ExperimentId::Vortex,
        ExperimentId::VortexInterface,
    ];
    let mut min_rho = f64::INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut failures = Vec::new();
    let mut ledger_failures = Vec::new();
    let runs: Vec<_> = (0..100u64)
        .map(|i| (experiments[i as usize % 3], i))
        .collect();
    let results: Vec<_> = with_pool(
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        || {
            use rayon::prelude::*;
            runs.par_iter()
                .map(|&(e, i)| solve(e, 64, i, 2024).map(|(t, s)| (e, i, t, s)))
                .collect()
        },
    )
    .expect("thread pool");
    for r in results {
        match r {
            Err(e) => failures.push(e),
            Ok((e, i, traj, setup)) => {
                for s in &traj.states {
                    min_rho = min_rho.min(s.min_density());
                }
                let params = setup
                    .model
                    .draw_sample(i, 0)
                    .fluid_params(&setup.mesh, setup.a, setup.gamma)
                    .expect("params");
                match energy_ledger_check(&traj, &params, 1e-9) {
                    Ok(rep) => min_slack = min_slack.min(rep.min_slack()),
                    Err(err) => ledger_failures.push(format!("{e} sample {i}: {err}")),
                }
            }
        }
    }
    let c2 = if failures.is_empty() && min_rho > 0.0 {
        Ok(format!(
            "100 samples, min density over all steps {min_rho:.4}"
        ))
    } else {
        Err(format!(
            "{} solver failures {:?}, min density {min_rho:e}",
            failures.len(),
            failures.first()
        ))
    };
    let c3 = if failures.is_empty() && ledger_failures.is_empty() && min_slack >= -1e-9 {
        Ok(format!("min per-step slack {min_slack:.3e}"))
    } else {
        Err(format!(
            "ledger failures {:?}, min slack {min_slack:e}",
            ledger_failures.first()
        ))
    };
    (c2, c3)
}

fn criterion_4() -> Outcome {
    // flux on constants is exactly r v
    for &r in &[0.3, 1.0, 2.5] {
        for &v in &[-1.5, 0.0, 0.4] {
            let f = upwind_flux((r, r), (v, v), 2.0 / 64.0, 0.6);
            ensure(f == r * v, || format!("flux({r},{v}) = {f}"))?;
        }
    }
    // every face of an n=4 mesh against indices computed by hand
    let n = 4;
    let m4 = Arc::new(TorusMesh::new(n, 2).unwrap());
    let value = |i: usize, j: usize| (i * 7 + j * j) as f64 - 3.5;
    let vals = (0..n * n).map(|k| value(k / n, k % n)).collect();
    let f = Field::from_values(m4.clone(), 1, vals).unwrap();
    for i in 0..n {
        for j in 0..n {
            for (axis, (oi, oj)) in [((i + 1) % n, j), (i, (j + 1) % n)].into_iter().enumerate() {
                let face = m4.face((i * n + j) * 2 + axis);
                let (a, b) = (value(i, j), value(oi, oj));
                ensure(
                    avg(&f, face, 0) == 0.5 * (a + b) && jump(&f, face, 0) == b - a,
                    || format!("face of cell ({i},{j}) along axis {axis}"),
                )?;
            }
        }
    }

    // face cancellation: the residual of s against itself sums to zero
    let mesh = Arc::new(TorusMesh::new(16, 2).unwrap());
    let mut rng = rng_stream(4, 0, 4);
    let rho: Vec<f64> = (0..256).map(|_| rng.random_range(0.5..1.5)).collect();
    let mom: Vec<f64> = (0..512).map(|_| rng.random_range(-0.5..0.5)).collect();
    let s = State::new(
        Field::from_values(mesh.clone(), 1, rho).unwrap(),
        Field::from_values(mesh.clone(), 2, mom).unwrap(),
    )
    .unwrap();
    let params = mcnsfv_core::FluidParams::new(0.1, 0.0, 1.0, 1.4, None).unwrap();
    let r = residual(&s, &s, &params, &SchemeConfig::default(), 1.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for c in 0..3 {
        let sum: f64 = r.iter().skip(c).step_by(3).sum();
        worst = worst.max(sum.abs() / 256.0);
    }
    ensure(worst <= 1e-12, || format!("telescoping defect {worst:e}"))?;

    // Gram identity against explicit tensors on a 4-cell mesh
    let small = Arc::new(TorusMesh::new(2, 2).unwrap());
    let mut draw = || {
        Field::from_values(
            small.clone(),
            1,
            (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    };
    let a: Vec<Field> = (0..3).map(|_| draw()).collect();
    let b: Vec<Field> = (0..3).map(|_| draw()).collect();
    let mut gap = 0.0f64;
    for k in 1..=3 {
        let g = tensor_moment_error_l2(&a, &b, k).unwrap();
        let e = explicit_tensor_moment_error(&a, &b, k);
        gap = gap.max((g - e).abs() / e);
    }
    ensure(gap <= 1e-10, || format!("Gram gap {gap:e}"))?;
    Ok(format!(
        "flux exact, enumeration exact, telescoping {worst:.1e}, Gram gap {gap:.1e}"
    ))
}

fn criterion_5(out: &Path) -> Outcome {
    let cfg = RunConfig {
        experiment: ExperimentId::SteadyState,
        seed: 1,
        out: out.to_path_buf(),
        ..RunConfig::default()
    };
    let start = Instant::now();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    with_pool(threads, || -> Result<(), String> {
        commands::reference(&cfg).map_err(|e| e.to_string())?;
        commands::estimate(&cfg).map_err(|e| e.to_string())?;
        Ok(())
    })
    .map_err(|e| e.to_string())??;
    let elapsed = start.elapsed().as_secs_f64();
    let rows = read_metrics_csv(&out.join(commands::METRICS_FILE)).map_err(|e| e.to_string())?;
    ensure(rows.len() == 4 * 3 * 5, || {
        format!("metrics table has {} rows", rows.len())
    })?;
    let rates = fit_rates(&rows).map_err(|e| e.to_string())?;
    let fmt = |r: &RateRow| format!("{}/{} {:+.3}", r.field, r.metric, r.slope);
    let mut hard = Vec::new();
    let mut soft = Vec::new();
    for r in &rates {
        let mean_metric = r.metric == "E1" || r.metric == "E2";
        let band = if mean_metric {
            -0.65..=-0.35
        } else {
            -0.8..=-0.2
        };
        if !band.contains(&r.slope) {
            hard.push(fmt(r));
        } else if !mean_metric && !(-0.65..=-0.35).contains(&r.slope) {
            soft.push(fmt(r));
        }
    }
    let slopes: Vec<String> = rates.iter().map(fmt).collect();
    if !soft.is_empty() {
        println!(
            "  warning: E3/E4 slopes outside [-0.65, -0.35]: {}",
            soft.join(", ")
        );
    }
    ensure(hard.is_empty(), || {
        format!("slopes out of band: {}", hard.join(", "))
    })?;
    Ok(format!(
        "{} ({elapsed:.0} s on {threads} threads)",
        slopes.join(", ")
    ))
}

fn criterion_6() -> Outcome {
    let sample = DataSample::with_perturbations(ExperimentId::Vortex, [0.05, 0.03, -0.04]);
    let quad = GaussLegendre::default();
    let cfg = SchemeConfig::default();
    let run = |n: usize| -> Result<State, String> {
        let mesh = Arc::new(TorusMesh::new(n, 2).unwrap());
        let init = sample
            .initial_state(&mesh, &quad)
            .map_err(|e| e.to_string())?;
        let params = sample
            .fluid_params(&mesh, 1.0, 1.4)
            .map_err(|e| e.to_string())?;
        let traj = mcnsfv_core::scheme::solve_trajectory(init, &params, &cfg)
            .map_err(|e| e.to_string())?;
        Ok(traj.final_state().clone())
    };
    let eos = mcnsfv_core::field::Eos::new(1.0, 1.4).unwrap();
    let fine = run(128)?;
    let mut errs = Vec::new();
    for n in [32, 64] {
        let coarse = run(n)?;
        let reference = fine.coarsen(coarse.mesh()).map_err(|e| e.to_string())?;
        errs.push(relative_energy(&coarse, &reference, &eos).map_err(|e| e.to_string())?);
    }
    let ratio = errs[0] / errs[1];
    ensure(ratio >= 1.5, || {
        format!(
            "E(32) {:.3e}, E(64) {:.3e}, ratio {ratio:.2}",
            errs[0], errs[1]
        )
    })?;
    Ok(format!(
        "relative energy n=32 {:.3e}, n=64 {:.3e}, ratio {ratio:.2}",
        errs[0], errs[1]
    ))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn criterion_7(root: &Path) -> Outcome {
    let run = |threads: usize, out: &Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        let cfg = RunConfig {
            experiment: ExperimentId::Vortex,
            n: 16,
            sample_sizes: vec![2, 4, 8],
            realisations: 3,
            reference_samples: 16,
            seed: 77,
            out: out.to_path_buf(),
            ..RunConfig::default()
        };
        with_pool(threads, || -> Result<(), String> {
            let e = |e: mcnsfv_cli::CliError| e.to_string();
            commands::run_sample(&cfg, 3).map_err(e)?;
            commands::reference(&cfg).map_err(e)?;
            commands::mc(&cfg).map_err(e)?;
            commands::estimate(&cfg).map_err(e)?;
            commands::convergence(&cfg).map_err(e)?;
            Ok(())
        })
        .map_err(|e| e.to_string())??;
        Ok(snapshot(out))
    };
    let a = run(1, &root.join("one"))?;
    let b = run(4, &root.join("four"))?;
    let c = run(2, &root.join("again"))?;
    ensure(a == b && a == c, || {
        let diff: Vec<_> = a
            .iter()
            .zip(&b)
            .filter(|(x, y)| x != y)
            .map(|(x, _)| x.0.clone())
            .collect();
        format!("outputs differ: {diff:?}")
    })?;
    Ok(format!(
        "{} files bitwise identical across 1, 4 and 2 threads",
        a.len()
    ))
}

fn criterion_8() -> Outcome {
    let mesh = Arc::new(TorusMesh::new(4, 2).unwrap());
    let pair = [
        Field::constant(mesh.clone(), &[0.0]).unwrap(),
        Field::constant(mesh.clone(), &[2.0]).unwrap(),
    ];
    let checks = [
        (mean_field(&pair).unwrap(), 1.0),
        (deviation_field(&pair).unwrap(), 1.0),
        (variance_field(&pair).unwrap(), 2.0),
    ];
    for (f, want) in &checks {
        ensure(f.values().iter().all(|v| (v - want).abs() <= 1e-14), || {
            "two-sample closed form".into()
        })?;
    }
    let mut rng = rng_stream(8, 0, 8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.random_range(2..10);
        let samples: Vec<Field> = (0..len)
            .map(|_| {
                Field::from_values(
                    mesh.clone(),
                    1,
                    (0..16).map(|_| rng.random_range(-3.0..3.0)).collect(),
                )
                .unwrap()
            })
            .collect();
        let c = rng.random_range(-5.0..5.0);
        let alpha: f64 = rng.random_range(-3.0..3.0);
        let shifted: Vec<Field> = samples.iter().map(|f| f.map(|v| v + c).unwrap()).collect();
        let scaled: Vec<Field> = samples.iter().map(|f| f.scaled(alpha).unwrap()).collect();
        let (m, d, v) = (
            mean_field(&samples).unwrap(),
            deviation_field(&samples).unwrap(),
            variance_field(&samples).unwrap(),
        );
        let gap = |a: &Field, b: &Field| {
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs() / (1.0 + y.abs()))
                .fold(0.0, f64::max)
        };
        for g in [
            gap(&mean_field(&shifted).unwrap(), &m.map(|x| x + c).unwrap()),
            gap(&deviation_field(&shifted).unwrap(), &d),
            gap(&variance_field(&shifted).unwrap(), &v),
            gap(&mean_field(&scaled).unwrap(), &m.scaled(alpha).unwrap()),
            gap(
                &deviation_field(&scaled).unwrap(),
                &d.scaled(alpha.abs()).unwrap(),
            ),
            gap(
                &variance_field(&scaled).unwrap(),
                &v.scaled(alpha * alpha).unwrap(),
            ),
        ] {
            worst = worst.max(g);
        }
    }
    ensure(worst <= 1e-12, || format!("equivariance gap {worst:e}"))?;
    Ok(format!(
        "closed forms exact, equivariance gap {worst:.1e} over 100 ensembles"
    ))
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("MCNSFV_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |k: u32| only.as_ref().is_none_or(|o| o.contains(&k));
    let scratch = tempfile::tempdir().expect("scratch directory");

    let guarded = |f: &dyn Fn() -> Outcome| -> Outcome {
        catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        })
    };

    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |k: u32, name: &'static str, outcome: Outcome| {
        match &outcome {
            Ok(msg) => println!("criterion {k} {name}: PASS  {msg}"),
            Err(msg) => println!("criterion {k} {name}: FAIL  {msg}"),
        }
        results.push((k, name, outcome));
    };

    if wanted(1) {
        report(1, "conservation", guarded(&criterion_1));
    }
    if wanted(2) || wanted(3) {
        let (c2, c3) = catch_unwind(criteria_2_3)
            .unwrap_or_else(|_| (Err("panic".into()), Err("panic".into())));
        if wanted(2) {
            report(2, "positivity", c2);
        }
        if wanted(3) {
            report(3, "energy ledger", c3);
        }
    }
    if wanted(4) {
        report(4, "flux and operator oracles", guarded(&criterion_4));
    }
    if wanted(5) {
        let dir = scratch.path().join("desk");
        report(5, "statistical rate", guarded(&|| criterion_5(&dir)));
    }
    if wanted(6) {
        report(6, "spatial error decay", guarded(&criterion_6));
    }
    if wanted(7) {
        let dir = scratch.path().join("determinism");
        report(7, "determinism", guarded(&|| criterion_7(&dir)));
    }
    if wanted(8) {
        report(8, "estimator oracles", guarded(&criterion_8));
    }

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
