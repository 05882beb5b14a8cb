//! Random initial data: the three perturbation experiments and the
//! counter-based streams that make every draw reproducible on its own.

mod stream;

pub use stream::{rng_stream, uniform_symmetric, REFERENCE_REALISATION};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Field, State};
use crate::mesh::{GaussLegendre, TorusMesh};
use crate::scheme::FluidParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    /// `ϱ₀ = 1 + Y₁ cos(2π(x₁+x₂))`, `u₀ = (Y₂, Y₃)`.
    SteadyState,
    /// The steady-state perturbation plus a swirl of radius 0.5.
    Vortex,
    /// Unit density and a swirl whose radius `I = 0.5 + Y` is random.
    VortexInterface,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SteadyState => "steady_state",
            Self::Vortex => "vortex",
            Self::VortexInterface => "vortex_interface",
        }
    }

    /// Number of uniform draws per sample.
    pub fn draws(self) -> usize {
        match self {
            Self::SteadyState | Self::Vortex => 3,
            Self::VortexInterface => 1,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steady_state" | "1" => Ok(Self::SteadyState),
            "vortex" | "2" => Ok(Self::Vortex),
            "vortex_interface" | "3" => Ok(Self::VortexInterface),
            other => Err(Error::param(
                "experiment",
                format!("unknown experiment `{other}`"),
            )),
        }
    }
}

/// Law of the random data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentModel {
    pub experiment: ExperimentId,
    /// Perturbations are `U(-w, w)` with `w = half_width`.
    pub half_width: f64,
    pub base_seed: u64,
    pub mu: f64,
    pub lambda: f64,
    /// Constant body force, one entry per axis; empty means zero.
    pub g: Vec<f64>,
}

impl ExperimentModel {
    pub fn new(experiment: ExperimentId, half_width: f64, base_seed: u64) -> Result<Self> {
        if !(half_width >= 0.0 && half_width.is_finite()) {
            return Err(Error::param(
                "half_width",
                format!("must be >= 0, got {half_width}"),
            ));
        }
        Ok(Self {
            experiment,
            half_width,
            base_seed,
            mu: 0.1,
            lambda: 0.0,
            g: Vec::new(),
        })
    }

    /// Draws sample `index` of realisation `realisation`.
    pub fn draw_sample(&self, index: u64, realisation: u64) -> DataSample {
        let mut rng = rng_stream(self.base_seed, index, realisation);
        let mut y = [0.0; 3];
        for yj in y.iter_mut().take(self.experiment.draws()) {
            *yj = uniform_symmetric(&mut rng, self.half_width);
        }
        DataSample {
            sample_id: index,
            realisation,
            experiment: self.experiment,
            y,
            mu: self.mu,
            lambda: self.lambda,
            g: self.g.clone(),
        }
    }
}

/// One element of the data space: initial density and velocity given as
/// pointwise formulas, plus the coefficients of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSample {
    pub sample_id: u64,
    pub realisation: u64,
    pub experiment: ExperimentId,
    /// Uniform draws; unused slots are zero.
    pub y: [f64; 3],
    pub mu: f64,
    pub lambda: f64,
    pub g: Vec<f64>,
}

impl DataSample {
    /// Sample with prescribed perturbations, bypassing the random stream.
    pub fn with_perturbations(experiment: ExperimentId, y: [f64; 3]) -> Self {
        Self {
            sample_id: 0,
            realisation: 0,
            experiment,
            y,
            mu: 0.1,
            lambda: 0.0,
            g: Vec::new(),
        }
    }

    /// Radius of the swirl in the vortex-interface experiment, `0.5 + Y`.
    pub fn interface(&self) -> f64 {
        0.5 + self.y[0]
    }

    pub fn rho0(&self, x: &[f64]) -> f64 {
        match self.experiment {
            ExperimentId::SteadyState | ExperimentId::Vortex => {
                1.0 + self.y[0] * (2.0 * std::f64::consts::PI * (x[0] + x[1])).cos()
            }
            ExperimentId::VortexInterface => 1.0,
        }
    }

    pub fn u0(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let pi = std::f64::consts::PI;
        match self.experiment {
            ExperimentId::SteadyState => {
                out[0] = self.y[1];
                out[1] = self.y[2];
            }
            ExperimentId::Vortex => {
                out[0] = self.y[1];
                out[1] = self.y[2];
                add_swirl(x, 0.5, |r| 1.0 - (4.0 * pi * r).cos(), out);
            }
            ExperimentId::VortexInterface => {
                let radius = self.interface();
                add_swirl(x, radius, |r| 1.0 - (2.0 * pi * r / radius).cos(), out);
            }
        }
    }

    pub fn m0(&self, x: &[f64], out: &mut [f64]) {
        self.u0(x, out);
        let rho = self.rho0(x);
        out.iter_mut().for_each(|m| *m *= rho);
    }

    /// Projected initial state `(Π_h ϱ₀, Π_h m₀)`.
    pub fn initial_state(&self, mesh: &Arc<TorusMesh>, quad: &GaussLegendre) -> Result<State> {
        let d = mesh.dim();
        let rho = mesh.project_scalar(quad, |x| self.rho0(x))?;
        let mom = mesh.project(quad, d, |x, out| self.m0(x, out))?;
        State::new(rho, mom)
    }

    pub fn fluid_params(&self, mesh: &Arc<TorusMesh>, a: f64, gamma: f64) -> Result<FluidParams> {
        let g = if self.g.iter().any(|&v| v != 0.0) {
            if self.g.len() != mesh.dim() {
                return Err(Error::param("g", "body force needs one entry per axis"));
            }
            Some(Field::constant(mesh.clone(), &self.g)?)
        } else {
            None
        };
        FluidParams::new(self.mu, self.lambda, a, gamma, g)
    }
}

/// Adds `s(|x|) (x₂, -x₁)/|x|` for `|x| < radius` (first two axes). The
/// profile vanishes at the origin, where the swirl is continued by zero.
fn add_swirl(x: &[f64], radius: f64, profile: impl Fn(f64) -> f64, out: &mut [f64]) {
    let r = x[0].hypot(x[1]);
    if r < radius && r > 0.0 {
        let s = profile(r) / r;
        out[0] += s * x[1];
        out[1] -= s * x[0];
    }
}

/// Exposes the raw uniform stream for statistical checks.
pub fn uniform_draws(base_seed: u64, index: u64, realisation: u64, count: usize) -> Vec<f64> {
    let mut rng = rng_stream(base_seed, index, realisation);
    (0..count).map(|_| rng.random::<f64>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_perturbation_is_rest_state() {
        let s = DataSample::with_perturbations(ExperimentId::SteadyState, [0.0; 3]);
        let mut u = [9.0; 2];
        for x in [[0.3, -0.7], [0.0, 0.0], [-1.0, 0.99]] {
            assert_eq!(s.rho0(&x), 1.0);
            s.u0(&x, &mut u);
            assert_eq!(u, [0.0, 0.0]);
        }
    }

    #[test]
    fn vortex_limit_at_origin() {
        let s = DataSample::with_perturbations(ExperimentId::Vortex, [0.0, 0.05, -0.02]);
        let mut u = [0.0; 2];
        s.u0(&[0.0, 0.0], &mut u);
        assert_eq!(u, [0.05, -0.02]);
        // (1 - cos(4πr))/r ~ 8π² r near zero
        s.u0(&[1e-7, 0.0], &mut u);
        assert!((u[0] - 0.05).abs() < 1e-12);
        assert!((u[1] + 0.02).abs() < 1e-5);
    }

    #[test]
    fn vortex_speed_at_quarter_radius() {
        let s = DataSample::with_perturbations(ExperimentId::Vortex, [0.0; 3]);
        let mut u = [0.0; 2];
        let x = [0.25 * 0.6, 0.25 * 0.8];
        s.u0(&x, &mut u);
        assert!((u[0] - 2.0 * 0.8).abs() < 1e-14);
        assert!((u[1] + 2.0 * 0.6).abs() < 1e-14);
        s.u0(&[0.6, 0.0], &mut u);
        assert_eq!(u, [0.0, 0.0]);
    }

    #[test]
    fn interface_radius_controls_support() {
        let s = DataSample::with_perturbations(ExperimentId::VortexInterface, [0.08, 0.0, 0.0]);
        assert_eq!(s.interface(), 0.58);
        let mut u = [0.0; 2];
        s.u0(&[0.55, 0.0], &mut u);
        assert!(u[1] != 0.0);
        s.u0(&[0.59, 0.0], &mut u);
        assert_eq!(u, [0.0, 0.0]);
        assert_eq!(s.rho0(&[0.1, 0.2]), 1.0);
    }

    #[test]
    fn draws_respect_half_width() {
        let model = ExperimentModel::new(ExperimentId::Vortex, 0.1, 7).unwrap();
        for i in 0..200 {
            let s = model.draw_sample(i, 0);
            assert!(s.y.iter().all(|y| y.abs() <= 0.1));
        }
        let model = ExperimentModel::new(ExperimentId::VortexInterface, 0.1, 7).unwrap();
        let s = model.draw_sample(3, 0);
        assert_eq!(&s.y[1..], &[0.0, 0.0]);
        assert!(ExperimentModel::new(ExperimentId::Vortex, -0.1, 7).is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in [
            ExperimentId::SteadyState,
            ExperimentId::Vortex,
            ExperimentId::VortexInterface,
        ] {
            assert_eq!(e.as_str().parse::<ExperimentId>().unwrap(), e);
        }
        assert!("vortex2".parse::<ExperimentId>().is_err());
    }
}
