//! Invariant suite: checks that the discrete structure the scheme is built
//! on actually holds for the compiled code. It is cheap enough to run as a
//! smoke test and sensitive enough to flag a scheme whose face fluxes do not
//! cancel.

use std::borrow::Borrow;
use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::field::{avg, jump, lp_norm, Field, State, Trajectory};
use crate::mc::tensor_moment_error_l2;
use crate::mesh::{GaussLegendre, TorusMesh};
use crate::random_data::{rng_stream, ExperimentId, ExperimentModel};
use crate::scheme::{
    energy_ledger_check, solve_trajectory_with, upwind_flux, Assembler, SchemeConfig,
    LEDGER_TOLERANCE,
};

/// Drift bound for the conserved totals, relative to their natural scale.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;
pub const TELESCOPING_TOLERANCE: f64 = 1e-12;
pub const GRAM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub n: usize,
    pub seed: u64,
    pub steps: usize,
    /// Run against a scheme whose face fluxes enter both neighbours with the
    /// same sign.
    pub mutate_flux_sign: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            n: 16,
            seed: 2024,
            steps: 3,
            mutate_flux_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    fn record(&mut self, name: &'static str, passed: bool, detail: String) {
        self.properties.push(PropertyResult {
            name,
            passed,
            detail,
        });
    }
}

/// Largest relative drift of total mass and total momentum along a
/// trajectory. Momentum drift is measured against `∫|m₀|`, or against the
/// initial mass when the initial momentum vanishes identically.
pub fn conservation_drift(traj: &Trajectory) -> (f64, f64) {
    let s0 = &traj.states[0];
    let mass0 = s0.total_mass();
    let mom0 = s0.total_momentum();
    let mom_scale = {
        let l1 = lp_norm(&s0.mom, 1.0);
        if l1 > 0.0 {
            l1
        } else {
            mass0.abs()
        }
    };
    let mut mass_drift: f64 = 0.0;
    let mut mom_drift: f64 = 0.0;
    for s in &traj.states[1..] {
        mass_drift = mass_drift.max((s.total_mass() - mass0).abs() / mass0.abs());
        let p = s.total_momentum();
        let diff = p
            .iter()
            .zip(&mom0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        mom_drift = mom_drift.max(diff / mom_scale);
    }
    (mass_drift, mom_drift)
}

/// Explicit `‖(1/N) Σ fⁿ^{⊗k} − (1/S) Σ gˢ^{⊗k}‖_{L²(T^{kd})}` for scalar
/// fields, forming the full `|cells|^k` tensors. Only sensible on tiny
/// meshes; it is the oracle for the Gram-identity implementation.
pub fn explicit_tensor_moment_error<F: Borrow<Field>, G: Borrow<Field>>(
    a: &[F],
    b: &[G],
    k: u32,
) -> f64 {
    let first = a[0].borrow();
    assert!(
        first.is_scalar(),
        "explicit tensor oracle handles scalar fields"
    );
    let cells = first.mesh().num_cells();
    let size = cells.pow(k);
    let moment = |fields: Vec<&Field>| -> Vec<f64> {
        let mut t = vec![0.0; size];
        for f in &fields {
            let v = f.values();
            for (idx, entry) in t.iter_mut().enumerate() {
                let mut rest = idx;
                let mut prod = 1.0;
                for _ in 0..k {
                    prod *= v[rest % cells];
                    rest /= cells;
                }
                *entry += prod;
            }
        }
        let inv = 1.0 / fields.len() as f64;
        t.iter_mut().for_each(|x| *x *= inv);
        t
    };
    let ta = moment(a.iter().map(|f| f.borrow()).collect());
    let tb = moment(b.iter().map(|g| g.borrow()).collect());
    let vol = first.mesh().cell_volume().powi(k as i32);
    (vol * ta
        .iter()
        .zip(&tb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>())
    .sqrt()
}

fn check_flux_consistency() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for &r in &[0.25, 1.0, 3.5] {
        for &v in &[-2.0, -0.3, 0.0, 0.7, 5.0] {
            for &h in &[1.0 / 8.0, 1.0 / 64.0] {
                let f = upwind_flux((r, r), (v, v), h, 0.6);
                worst = worst.max((f - r * v).abs());
            }
        }
    }
    (worst == 0.0, format!("max |F(r,r,v,v) - r v| = {worst:e}"))
}

fn check_jump_average() -> Result<(bool, String)> {
    let n = 4;
    let mesh = Arc::new(TorusMesh::new(n, 2)?);
    let value = |i: usize, j: usize| (10 * i + j) as f64 + 0.25;
    let mut vals = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vals[i * n + j] = value(i, j);
        }
    }
    let f = Field::from_values(mesh.clone(), 1, vals)?;
    let mut mismatches = 0;
    for i in 0..n {
        for j in 0..n {
            let cell = i * n + j;
            for axis in 0..2 {
                let (oi, oj) = if axis == 0 {
                    ((i + 1) % n, j)
                } else {
                    (i, (j + 1) % n)
                };
                let face = mesh.face(cell * 2 + axis);
                let (a, b) = (value(i, j), value(oi, oj));
                if avg(&f, face, 0) != 0.5 * (a + b) || jump(&f, face, 0) != b - a {
                    mismatches += 1;
                }
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{mismatches} of {} faces disagree", 2 * n * n),
    ))
}

fn random_state(mesh: &Arc<TorusMesh>, seed: u64) -> Result<State> {
    let mut rng = rng_stream(seed, 0, 0x7e57);
    let d = mesh.dim();
    let rho: Vec<f64> = (0..mesh.num_cells())
        .map(|_| rng.random_range(0.5..1.5))
        .collect();
    let mom: Vec<f64> = (0..mesh.num_cells() * d)
        .map(|_| rng.random_range(-0.5..0.5))
        .collect();
    State::new(
        Field::from_values(mesh.clone(), 1, rho)?,
        Field::from_values(mesh.clone(), d, mom)?,
    )
}

fn check_telescoping(asm: &Assembler, state: &State) -> (bool, String) {
    let x = state.to_interleaved();
    let mut r = vec![0.0; x.len()];
    if let Err(cell) = asm.residual_into(&x, &x, 1.0, &mut r) {
        return (false, format!("nonpositive density in cell {cell}"));
    }
    let nd = state.mesh().dim() + 1;
    let cells = state.mesh().num_cells() as f64;
    let worst = (0..nd)
        .map(|c| r.iter().skip(c).step_by(nd).sum::<f64>().abs() / cells)
        .fold(0.0, f64::max);
    (
        worst <= TELESCOPING_TOLERANCE,
        format!("max |Σ_K R_K| / |cells| = {worst:e}"),
    )
}

fn check_gram() -> Result<(bool, String)> {
    let mesh = Arc::new(TorusMesh::new(2, 2)?);
    let mut rng = rng_stream(99, 0, 0x6a4);
    let mut draw = || {
        Field::from_values(
            mesh.clone(),
            1,
            (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
    };
    let a = (0..3).map(|_| draw()).collect::<Result<Vec<_>>>()?;
    let b = (0..3).map(|_| draw()).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let gram = tensor_moment_error_l2(&a, &b, k)?;
        let brute = explicit_tensor_moment_error(&a, &b, k);
        worst = worst.max((gram - brute).abs() / brute.max(f64::MIN_POSITIVE));
    }
    Ok((
        worst <= GRAM_TOLERANCE,
        format!("max relative gap {worst:e} for k <= 3"),
    ))
}

/// Runs every property and reports each one; a failing property does not
/// stop the suite.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();

    let (ok, detail) = check_flux_consistency();
    report.record("flux_consistency", ok, detail);
    let (ok, detail) = check_jump_average()?;
    report.record("jump_average_enumeration", ok, detail);

    let mesh = Arc::new(TorusMesh::new(opts.n, 2)?);
    let model = ExperimentModel::new(ExperimentId::Vortex, 0.1, opts.seed)?;
    let sample = model.draw_sample(0, 0);
    let params = sample.fluid_params(&mesh, 1.0, 1.4)?;
    let mut cfg = SchemeConfig::default();
    cfg.final_time = opts.steps as f64 * cfg.dt(mesh.h());
    let assembler = || -> Result<Assembler> {
        let asm = Assembler::new(mesh.clone(), &params, &cfg)?;
        Ok(if opts.mutate_flux_sign {
            asm.with_flux_sign_mutation()
        } else {
            asm
        })
    };

    let (ok, detail) = check_telescoping(&assembler()?, &random_state(&mesh, opts.seed)?);
    report.record("residual_telescoping", ok, detail);

    let initial = sample.initial_state(&mesh, &GaussLegendre::default())?;
    match solve_trajectory_with(initial, &params, &cfg, assembler()?) {
        Ok(traj) => {
            let (dm, dp) = conservation_drift(&traj);
            report.record(
                "mass_conservation",
                dm <= CONSERVATION_TOLERANCE,
                format!("relative mass drift {dm:e}"),
            );
            report.record(
                "momentum_conservation",
                dp <= CONSERVATION_TOLERANCE,
                format!("relative momentum drift {dp:e}"),
            );
            let min_rho = traj
                .states
                .iter()
                .map(State::min_density)
                .fold(f64::INFINITY, f64::min);
            report.record(
                "positivity",
                min_rho > 0.0,
                format!("min density {min_rho:e}"),
            );
            match energy_ledger_check(&traj, &params, LEDGER_TOLERANCE) {
                Ok(l) => report.record(
                    "energy_ledger",
                    true,
                    format!("min slack {:e}", l.min_slack()),
                ),
                Err(e) => report.record("energy_ledger", false, e.to_string()),
            }
        }
        Err(e) => {
            for name in [
                "mass_conservation",
                "momentum_conservation",
                "positivity",
                "energy_ledger",
            ] {
                report.record(name, false, format!("trajectory failed: {e}"));
            }
        }
    }

    let (ok, detail) = check_gram()?;
    report.record("gram_oracle", ok, detail);
    Ok(report)
}
