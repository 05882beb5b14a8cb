use super::assembly::Assembler;
use super::linear::{BlockIlu0, BlockMatrix, DirectSolver, Gmres, LinearSolverKind};
use super::SolverConfig;
use crate::error::{Error, Result};

/// Largest number of step halvings tried to keep trial densities positive.
const MAX_DAMPING_HALVINGS: u32 = 40;

enum Backend {
    Direct(Box<DirectSolver>),
    Krylov(BlockIlu0, Gmres),
}

/// Damped Newton iteration for one implicit step, started from the previous
/// time level.
pub struct NewtonSolver {
    asm: Assembler,
    jac: BlockMatrix,
    backend: Backend,
    cfg: SolverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub iterations: usize,
    /// Max-norm of the final residual.
    pub residual: f64,
    pub initial_residual: f64,
}

impl NewtonSolver {
    pub fn new(asm: Assembler, cfg: SolverConfig) -> Result<Self> {
        let jac = asm.pattern();
        let backend = match cfg.linear.resolve(asm.unknowns()) {
            LinearSolverKind::Gmres => Backend::Krylov(
                BlockIlu0::new(&jac),
                Gmres {
                    restart: 60,
                    max_iters: 600,
                    rtol: 1e-10,
                },
            ),
            _ => Backend::Direct(Box::new(DirectSolver::new(&jac)?)),
        };
        Ok(Self {
            asm,
            jac,
            backend,
            cfg,
        })
    }

    pub fn assembler(&self) -> &Assembler {
        &self.asm
    }

    /// Solves the step `x_old -> x` over `dt`.
    pub fn solve(&mut self, x_old: &[f64], dt: f64) -> Result<(Vec<f64>, NewtonOutcome)> {
        let n = x_old.len();
        let mut x = x_old.to_vec();
        let mut res = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial_res = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let fail = |reason: String, iterations: usize, residual: f64| Error::SolverFailure {
            time: f64::NAN,
            reason,
            iterations,
            residual,
        };

        self.asm
            .residual_into(&x, x_old, dt, &mut res)
            .map_err(|cell| {
                fail(
                    format!("nonpositive density in cell {cell} of the initial guess"),
                    0,
                    f64::NAN,
                )
            })?;
        let initial = max_norm(&res);
        let tol = self.cfg.tol_abs + self.cfg.tol_rel * initial;
        let mut current = initial;
        let mut iterations = 0;
        while current > tol {
            if !current.is_finite() {
                return Err(fail("non-finite residual".into(), iterations, current));
            }
            if iterations == self.cfg.max_iters {
                return Err(fail("Newton did not converge".into(), iterations, current));
            }
            self.asm.jacobian_into(&x, dt, &mut self.jac)?;
            for (r, v) in rhs.iter_mut().zip(&res) {
                *r = -v;
            }
            match &mut self.backend {
                Backend::Direct(lu) => {
                    lu.factor(&self.jac)?;
                    lu.solve(&rhs, &mut delta)?;
                }
                Backend::Krylov(ilu, gmres) => {
                    ilu.factor(&self.jac)?;
                    gmres.solve(&self.jac, ilu, &rhs, &mut delta)?;
                }
            }
            let mut alpha = 1.0;
            let mut halvings = 0;
            loop {
                for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&delta) {
                    *t = xi + alpha * di;
                }
                if self
                    .asm
                    .residual_into(&trial, x_old, dt, &mut trial_res)
                    .is_ok()
                    && trial_res.iter().all(|v| v.is_finite())
                {
                    break;
                }
                halvings += 1;
                if halvings > MAX_DAMPING_HALVINGS {
                    return Err(fail(
                        "damping could not keep the density positive".into(),
                        iterations,
                        current,
                    ));
                }
                alpha *= 0.5;
            }
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut res, &mut trial_res);
            current = max_norm(&res);
            iterations += 1;
        }
        Ok((
            x,
            NewtonOutcome {
                iterations,
                residual: current,
                initial_residual: initial,
            },
        ))
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| {
        if x.abs() > m || x.is_nan() {
            x.abs()
        } else {
            m
        }
    })
}
