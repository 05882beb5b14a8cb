use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error(
        "mesh mismatch: expected d={expected_d}, n={expected_n}, found d={found_d}, n={found_n}"
    )]
    MeshMismatch {
        expected_d: usize,
        expected_n: usize,
        found_d: usize,
        found_n: usize,
    },

    #[error("non-finite value {value} at {context}")]
    NonFinite { value: f64, context: String },

    #[error("infinite energy: cell {cell} has density {rho} with nonzero momentum")]
    InfiniteEnergy { cell: usize, rho: f64 },

    #[error("density {rho:e} in cell {cell} is below the floor")]
    DensityFloor { cell: usize, rho: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "solver failed at t={time}: {reason} (iterations={iterations}, residual={residual:e})"
    )]
    SolverFailure {
        time: f64,
        reason: String,
        iterations: usize,
        residual: f64,
    },

    #[error("energy ledger violated at step {step}: slack {slack:e}")]
    LedgerViolation { step: usize, slack: f64 },

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("every sample of the ensemble failed ({0} samples)")]
    AllSamplesFailed(usize),

    #[error("checksum mismatch for sample {sample_id} in {path}")]
    ChecksumMismatch { sample_id: u64, path: PathBuf },

    #[error("checksum mismatch for {0}")]
    PayloadChecksum(PathBuf),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config hash mismatch: manifest was produced by a different configuration")]
    ConfigMismatch,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
