//! Monte Carlo layer: ensembles of independent samples, cellwise estimators,
//! the statistical error metrics, k-th moment errors, rate fitting and the
//! persistence formats shared with the plotting tools.

mod ensemble;
mod estimators;
mod metrics;
pub mod persist;
mod rate;
mod tensor;

pub use ensemble::{run_ensemble, run_ensemble_with_faults, Ensemble, RunSetup, SampleFailure};
pub use estimators::{
    deviation_about, deviation_field, mean_field, variance_about, variance_field, Moments,
    ReferenceStats, Spread, Unknown,
};
pub use metrics::{error_metrics, power_means, realisation_errors, ErrorMetrics};
pub use persist::{
    load_ensemble, load_reference, read_metrics_csv, save_ensemble, save_reference,
    write_metrics_csv, Manifest, MetricRow,
};
pub use rate::{slope_fit, SlopeFit};
pub use tensor::tensor_moment_error_l2;
