use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{Field, State};

/// Sum of per-sample contributions accumulated along a fixed binary tree
/// over the sample index, so the rounding pattern depends only on the
/// number of samples and never on scheduling.
pub(crate) fn tree_sum<T>(items: &[T], len: usize, f: &impl Fn(&T, &mut [f64])) -> Vec<f64> {
    match items.len() {
        0 => vec![0.0; len],
        1 => {
            let mut out = vec![0.0; len];
            f(&items[0], &mut out);
            out
        }
        n => {
            let (lo, hi) = items.split_at(n / 2);
            let mut a = tree_sum(lo, len, f);
            let b = tree_sum(hi, len, f);
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        }
    }
}

fn check_samples<F: Borrow<Field>>(samples: &[F], min: usize, what: &str) -> Result<()> {
    if samples.len() < min {
        return Err(Error::Estimator(format!(
            "{what} needs at least {min} samples, got {}",
            samples.len()
        )));
    }
    let first = samples[0].borrow();
    samples
        .iter()
        .try_for_each(|s| first.check_compatible(s.borrow()))
}

/// `(1/N) Σ Uⁿ`, accumulated as `U¹ + (1/N) Σ (Uⁿ − U¹)` so that identical
/// samples reproduce themselves exactly and large offsets do not swamp the
/// fluctuations.
pub fn mean_field<F: Borrow<Field>>(samples: &[F]) -> Result<Field> {
    check_samples(samples, 1, "mean")?;
    let first = samples[0].borrow();
    let anchor = first.values();
    let sum = tree_sum(samples, anchor.len(), &|s: &F, out: &mut [f64]| {
        for ((o, u), a) in out.iter_mut().zip(s.borrow().values()).zip(anchor) {
            *o = u - a;
        }
    });
    let inv = 1.0 / samples.len() as f64;
    Field::from_values(
        first.mesh().clone(),
        first.components(),
        sum.into_iter()
            .zip(anchor)
            .map(|(v, a)| a + v * inv)
            .collect(),
    )
}

/// `(1/N) Σ |Uⁿ − center|`, componentwise.
pub fn deviation_about<F: Borrow<Field>>(samples: &[F], center: &Field) -> Result<Field> {
    check_samples(samples, 1, "deviation")?;
    center.check_compatible(samples[0].borrow())?;
    let c = center.values();
    let sum = tree_sum(samples, c.len(), &|s: &F, out: &mut [f64]| {
        for ((o, u), m) in out.iter_mut().zip(s.borrow().values()).zip(c) {
            *o = (u - m).abs();
        }
    });
    let inv = 1.0 / samples.len() as f64;
    Field::from_values(
        center.mesh().clone(),
        center.components(),
        sum.into_iter().map(|v| v * inv).collect(),
    )
}

/// Unbiased `(1/(N−1)) Σ (Uⁿ − center)²`, componentwise.
pub fn variance_about<F: Borrow<Field>>(samples: &[F], center: &Field) -> Result<Field> {
    check_samples(samples, 2, "variance")?;
    center.check_compatible(samples[0].borrow())?;
    let c = center.values();
    let sum = tree_sum(samples, c.len(), &|s: &F, out: &mut [f64]| {
        for ((o, u), m) in out.iter_mut().zip(s.borrow().values()).zip(c) {
            *o = (u - m) * (u - m);
        }
    });
    let inv = 1.0 / (samples.len() - 1) as f64;
    Field::from_values(
        center.mesh().clone(),
        center.components(),
        sum.into_iter().map(|v| v * inv).collect(),
    )
}

pub fn deviation_field<F: Borrow<Field>>(samples: &[F]) -> Result<Field> {
    deviation_about(samples, &mean_field(samples)?)
}

pub fn variance_field<F: Borrow<Field>>(samples: &[F]) -> Result<Field> {
    variance_about(samples, &mean_field(samples)?)
}

/// The three unknowns whose statistics are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unknown {
    Rho,
    M,
    U,
}

/// How the spread of an unknown is measured: first absolute central moment
/// for density and momentum, unbiased variance for velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spread {
    Deviation,
    Variance,
}

impl Unknown {
    pub const ALL: [Unknown; 3] = [Unknown::Rho, Unknown::M, Unknown::U];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rho => "rho",
            Self::M => "m",
            Self::U => "u",
        }
    }

    /// Lebesgue exponent of the natural energy space of the unknown.
    pub fn exponent(self, gamma: f64) -> f64 {
        match self {
            Self::Rho => gamma,
            Self::M => 2.0 * gamma / (gamma + 1.0),
            Self::U => 2.0,
        }
    }

    pub fn spread(self) -> Spread {
        match self {
            Self::U => Spread::Variance,
            _ => Spread::Deviation,
        }
    }

    pub fn extract(self, state: &State) -> Result<Field> {
        match self {
            Self::Rho => Ok(state.rho.clone()),
            Self::M => Ok(state.mom.clone()),
            Self::U => state.velocity(),
        }
    }

    pub fn extract_all<S: Borrow<State>>(self, states: &[S]) -> Result<Vec<Field>> {
        states.iter().map(|s| self.extract(s.borrow())).collect()
    }
}

impl fmt::Display for Unknown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Unknown {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Self::Rho),
            "m" => Ok(Self::M),
            "u" => Ok(Self::U),
            other => Err(Error::param("field", format!("unknown field `{other}`"))),
        }
    }
}

/// Mean and spread of one unknown over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Field,
    pub spread: Field,
}

impl Moments {
    pub fn of<S: Borrow<State>>(states: &[S], unknown: Unknown) -> Result<Self> {
        let samples = unknown.extract_all(states)?;
        let mean = mean_field(&samples)?;
        let spread = match unknown.spread() {
            Spread::Deviation => deviation_about(&samples, &mean)?,
            Spread::Variance => variance_about(&samples, &mean)?,
        };
        Ok(Self { mean, spread })
    }
}

/// Reference statistics from a large ensemble: `E[ϱ], E[m], E[u]`,
/// `Dev(ϱ), Dev(m)` and `Var(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStats {
    pub rho: Moments,
    pub m: Moments,
    pub u: Moments,
    /// Number of samples the statistics were built from.
    pub samples: usize,
}

impl ReferenceStats {
    pub fn from_states<S: Borrow<State>>(states: &[S]) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Estimator(format!(
                "reference statistics need at least 2 samples, got {}",
                states.len()
            )));
        }
        Ok(Self {
            rho: Moments::of(states, Unknown::Rho)?,
            m: Moments::of(states, Unknown::M)?,
            u: Moments::of(states, Unknown::U)?,
            samples: states.len(),
        })
    }

    pub fn get(&self, unknown: Unknown) -> &Moments {
        match unknown {
            Unknown::Rho => &self.rho,
            Unknown::M => &self.m,
            Unknown::U => &self.u,
        }
    }

    pub fn mesh_n(&self) -> usize {
        self.rho.mean.mesh().cells_per_axis()
    }
}
