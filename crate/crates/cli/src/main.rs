use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linopt_cli::{cmd_bounds, cmd_erm, cmd_junta, cmd_swap_risk, cmd_verify, with_workers, CliError, Config, Format, OutputOptions, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "linopt", version, about = "Learning linear optical circuits: experiment sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config with one section per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweep points.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Empirical risk minimization sweep over schemes, E, T and seeds.
    Erm,
    /// Adaptive junta discovery over seeds, T and stage energies.
    Junta,
    /// Generalization gaps against the bound formulas.
    Bounds,
    /// Oracle, gradient, Lipschitz and marginal-energy self-checks.
    Verify,
    /// Exact empirical risk against its SWAP-test estimate.
    SwapRisk,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let opts = OutputOptions { out: cli.out, format: cli.format };
    let command = cli.command;
    with_workers(cli.workers, || match command {
        Command::Erm => cmd_erm(&cfg, &opts),
        Command::Junta => cmd_junta(&cfg, &opts),
        Command::Bounds => cmd_bounds(&cfg, &opts),
        Command::Verify => cmd_verify(&cfg, &opts),
        Command::SwapRisk => cmd_swap_risk(&cfg, &opts),
    })?
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = run(Cli::parse()).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
