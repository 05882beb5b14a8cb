use std::fmt;

use mcnsfv_core::Error as CoreError;

/// Failures of a subcommand, grouped by the exit code they map to.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or arguments (exit 2).
    Config(String),
    /// A solve broke down (exit 3).
    Solver(CoreError),
    /// A checked property does not hold (exit 4).
    Property(String),
    /// Missing or damaged inputs and other I/O problems (exit 1).
    Input(String),
    Other(CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Property(_) => 4,
            Self::Input(_) | Self::Other(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::InvalidMesh(_) => {
                Self::Config(e.to_string())
            }
            CoreError::SolverFailure { .. }
            | CoreError::AllSamplesFailed(_)
            | CoreError::DensityFloor { .. }
            | CoreError::InfiniteEnergy { .. }
            | CoreError::NonFinite { .. } => Self::Solver(e),
            CoreError::LedgerViolation { .. } => Self::Property(e.to_string()),
            other => Self::Other(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Solver(e) => write!(f, "solver failure: {e}"),
            Self::Property(m) => write!(f, "property failure: {m}"),
            Self::Input(m) => write!(f, "{m}"),
            Self::Other(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}
