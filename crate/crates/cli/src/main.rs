use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcnsfv_cli::{commands, resolve_threads, with_pool, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "mcnsfv",
    version,
    about = "Monte Carlo finite-volume experiments for barotropic Navier-Stokes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to MCNSFV_THREADS, then the config.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one sample and print its conservation and energy summary.
    RunSample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        sample: u64,
    },
    /// Build the reference statistics from S samples.
    Reference {
        #[command(flatten)]
        common: Common,
    },
    /// Solve and store the M test ensembles.
    Mc {
        #[command(flatten)]
        common: Common,
    },
    /// Compute the error metrics table against the stored reference.
    Estimate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit convergence rates to the metrics table.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suite.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        mutate_flux_sign: bool,
    },
}

fn load(common: &Common) -> Result<(RunConfig, usize), CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    let threads = resolve_threads(common.threads, &cfg)?;
    Ok((cfg, threads))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RunSample { common, sample } => {
            let (cfg, threads) = load(&common)?;
            let summary = with_pool(threads, || commands::run_sample(&cfg, sample))??;
            println!("{summary}");
            println!("wrote {}", summary.path.display());
        }
        Command::Reference { common } => {
            let (cfg, threads) = load(&common)?;
            let (stats, dir) = with_pool(threads, || commands::reference(&cfg))??;
            println!(
                "reference from {} samples written to {}",
                stats.samples,
                dir.display()
            );
        }
        Command::Mc { common } => {
            let (cfg, threads) = load(&common)?;
            let dirs = with_pool(threads, || commands::mc(&cfg))??;
            for d in dirs {
                println!("ensemble {}", d.display());
            }
        }
        Command::Estimate { common } => {
            let (cfg, threads) = load(&common)?;
            let path = with_pool(threads, || commands::estimate(&cfg))??;
            println!("metrics written to {}", path.display());
        }
        Command::Convergence { common } => {
            let (cfg, _) = load(&common)?;
            let (rates, path) = commands::convergence(&cfg)?;
            for r in &rates {
                let note = if (-0.65..=-0.35).contains(&r.slope) {
                    ""
                } else {
                    "  (outside [-0.65, -0.35])"
                };
                println!(
                    "{:>3} {} slope {:+.3} residual {:.3}{note}",
                    r.field, r.metric, r.slope, r.residual
                );
            }
            println!("rates written to {}", path.display());
        }
        Command::Verify {
            common,
            mutate_flux_sign,
        } => {
            let (cfg, threads) = load(&common)?;
            let report = with_pool(threads, || commands::verify(&cfg, mutate_flux_sign))??;
            for p in &report.properties {
                println!(
                    "{} {:<26} {}",
                    if p.passed { "PASS" } else { "FAIL" },
                    p.name,
                    p.detail
                );
            }
            if !report.all_passed() {
                return Err(CliError::Property(
                    "invariant suite reported failures".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
