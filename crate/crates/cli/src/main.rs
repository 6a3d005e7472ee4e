//! `mss` — ground-state solves and diagnostics for a planar Schrödinger
//! system with a local second derivative in `x` and a fractional Laplacian
//! in `y`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mixed_schrodinger_cli::commands;
use mixed_schrodinger_cli::RunConfig;

#[derive(Parser)]
#[command(
    name = "mss",
    version,
    about = "Pseudospectral ground-state solver and diagnostic suite for a mixed local/nonlocal Schrödinger system",
    after_help = "Configuration is a flat `section.key = value` text file (see --config); \
                  every key has a default, so each subcommand also runs bare."
)]
struct Cli {
    /// Run configuration file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's `out`; created on demand).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (default: logical cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Random seed (overrides the config's `seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state solve at a single coupling strength (fields, report,
    /// convergence history).
    Solve,
    /// Energy-level scan across an ascending coupling list, with optional
    /// threshold-crossing refinement.
    ScanKappa,
    /// Embedding-constant estimates (unrestricted and radial) per distinct
    /// fractional order.
    EstimateLambda,
    /// Dilation-identity residuals of a stored pair, or the multistart
    /// nonexistence probe.
    CheckPohozaev,
    /// Operator self-check battery; fails (exit 1) when any check fails.
    VerifyOperators,
}

fn run(cli: &Cli) -> mixed_schrodinger_cli::Result<u8> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(mixed_schrodinger_cli::Error::Config(
                "--jobs: must be at least 1".into(),
            ));
        }
        // Sizes the worker pool every parallel region draws from. Errors only
        // when a pool already exists (e.g. two --jobs flags); harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let cfg = RunConfig::load(cli.config.as_deref(), cli.seed, cli.out.as_deref())?;
    match cli.command {
        Command::Solve => commands::cmd_solve(&cfg),
        Command::ScanKappa => commands::cmd_scan_kappa(&cfg),
        Command::EstimateLambda => commands::cmd_estimate_lambda(&cfg),
        Command::CheckPohozaev => commands::cmd_check_pohozaev(&cfg),
        Command::VerifyOperators => commands::cmd_verify_operators(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
