use std::borrow::Borrow;

use super::estimators::{Moments, ReferenceStats, Unknown};
use crate::error::{Error, Result};
use crate::field::{lp_norm, State};

/// The four statistical error measures of one unknown at one ensemble
/// size: E1/E2 for the mean, E3/E4 for the deviation or variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

impl ErrorMetrics {
    pub fn as_array(&self) -> [(&'static str, f64); 4] {
        [
            ("E1", self.e1),
            ("E2", self.e2),
            ("E3", self.e3),
            ("E4", self.e4),
        ]
    }
}

/// Given per-realisation norms `‖e_j‖`, returns the plain average and the
/// `p`-power mean `((1/M) Σ ‖e_j‖ᵖ)^{1/p}`.
pub fn power_means(norms: &[f64], p: f64) -> (f64, f64) {
    let m = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / m;
    let pmean = (norms.iter().map(|e| e.powf(p)).sum::<f64>() / m).powf(1.0 / p);
    (mean, pmean)
}

/// `‖mean − E_ref‖_p` and `‖spread − spread_ref‖_p` for one realisation.
pub fn realisation_errors<S: Borrow<State>>(
    states: &[S],
    reference: &ReferenceStats,
    unknown: Unknown,
    p: f64,
) -> Result<(f64, f64)> {
    let moments = Moments::of(states, unknown)?;
    let r = reference.get(unknown);
    moments.mean.mesh().check_same(r.mean.mesh())?;
    Ok((
        lp_norm(&moments.mean.sub(&r.mean)?, p),
        lp_norm(&moments.spread.sub(&r.spread)?, p),
    ))
}

/// E1–E4 of `unknown` over `M = ensembles.len()` independent realisations.
pub fn error_metrics<E, S>(
    ensembles: &[E],
    reference: &ReferenceStats,
    unknown: Unknown,
    gamma: f64,
) -> Result<ErrorMetrics>
where
    E: AsRef<[S]>,
    S: Borrow<State>,
{
    if ensembles.is_empty() {
        return Err(Error::Estimator("no realisations".into()));
    }
    let p = unknown.exponent(gamma);
    let mut mean_err = Vec::with_capacity(ensembles.len());
    let mut spread_err = Vec::with_capacity(ensembles.len());
    for ens in ensembles {
        let (a, b) = realisation_errors(ens.as_ref(), reference, unknown, p)?;
        mean_err.push(a);
        spread_err.push(b);
    }
    let (e1, e2) = power_means(&mean_err, p);
    let (e3, e4) = power_means(&spread_err, p);
    Ok(ErrorMetrics { e1, e2, e3, e4 })
}
