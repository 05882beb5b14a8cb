//! Library side of the `mcnsfv` command: configuration parsing and the
//! subcommand implementations, kept separate from argument handling so they
//! can be driven from tests.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::CliError;

/// Environment variable consulted when `--threads` is not given.
pub const THREADS_ENV: &str = "MCNSFV_THREADS";

/// Worker count: the flag, then the environment, then the config, then all
/// available cores.
pub fn resolve_threads(flag: Option<usize>, cfg: &RunConfig) -> Result<usize, CliError> {
    if let Some(t) = flag.filter(|&t| t > 0) {
        return Ok(t);
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{THREADS_ENV}: expected a positive integer, got `{v}`"
                ))
            });
    }
    if cfg.threads > 0 {
        return Ok(cfg.threads);
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` inside a dedicated pool of `threads` workers.
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}
