//! Errors of k-th moments in `L²(T^{kd})` without forming any tensor: for
//! Hilbert-space valued samples `⟨f^{⊗k}, g^{⊗k}⟩ = ⟨f, g⟩^k`, so the
//! squared distance between two empirical k-th moments is a combination of
//! pairwise `L²(T^d)` inner products.

use std::borrow::Borrow;

use crate::error::{Error, Result};
use crate::field::{inner_product_l2, Field};

fn gram_mean<F: Borrow<Field>, G: Borrow<Field>>(a: &[F], b: &[G], k: i32) -> f64 {
    let mut total = 0.0;
    for f in a {
        let row: f64 = b
            .iter()
            .map(|g| inner_product_l2(f.borrow(), g.borrow()).powi(k))
            .sum();
        total += row;
    }
    total / (a.len() * b.len()) as f64
}

/// `‖(1/N) Σ fⁿ^{⊗k} − (1/S) Σ gˢ^{⊗k}‖_{L²(T^{kd})}`.
pub fn tensor_moment_error_l2<F: Borrow<Field>, G: Borrow<Field>>(
    samples: &[F],
    reference: &[G],
    k: u32,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "moment order must be at least 1"));
    }
    if samples.is_empty() || reference.is_empty() {
        return Err(Error::Estimator(
            "tensor moment needs nonempty ensembles".into(),
        ));
    }
    let first = samples[0].borrow();
    for f in samples {
        first.check_compatible(f.borrow())?;
    }
    for g in reference {
        first.check_compatible(g.borrow())?;
    }
    let k = k as i32;
    let sq = gram_mean(samples, samples, k) - 2.0 * gram_mean(samples, reference, k)
        + gram_mean(reference, reference, k);
    Ok(sq.max(0.0).sqrt())
}
