//! Upwind finite-volume solver for the barotropic compressible Navier-Stokes
//! system on the periodic torus, together with the Monte Carlo machinery used
//! to estimate statistics of solutions driven by random initial data.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: uniform periodic meshes and cell-average projection.
//! * [`field`]: piecewise-constant fields, discrete operators, norms and the
//!   energy functionals.
//! * [`scheme`]: the implicit upwind scheme, its Newton solver and the
//!   structure-preservation diagnostics.
//! * [`random_data`]: random initial data models and counter-based streams.
//! * [`mc`]: ensembles, estimators, error metrics, rate fitting and the
//!   on-disk formats.
//! * [`verify`]: the invariant suite behind the `verify` subcommand.

pub mod error;
pub mod field;
pub mod mc;
pub mod mesh;
pub mod random_data;
pub mod scheme;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Field, State, Trajectory};
pub use mesh::TorusMesh;
pub use random_data::{DataSample, ExperimentId, ExperimentModel};
pub use scheme::{FluidParams, SchemeConfig, SolverConfig};
