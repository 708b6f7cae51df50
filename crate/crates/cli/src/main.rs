use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nonlocal_cli::config::{Mode, RunConfig};
use nonlocal_cli::runner::DEFAULT_SEED;
use nonlocal_cli::{execute, parse_config, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "nonlocal", version, about = "Nonlocal diffusion laboratory on a ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides `[output].directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Treat reliability flags as property violations.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in a config file.
    Run { config: PathBuf },
    /// Run the built-in regression suite.
    Verify,
    /// Run the `[sweep]` table of a config file.
    Sweep { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions {
        out: cli.out,
        workers: cli.workers,
        seed: cli.seed,
        strict: cli.strict,
    };
    let config = match &cli.command {
        Command::Run { config } => load(config),
        Command::Sweep { config } => load(config).map(|mut c| {
            c.run.mode = Mode::Sweep;
            c
        }),
        Command::Verify => Ok(RunConfig::verify_default()),
    };
    let result = config.and_then(|c| execute(&c, &options));
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                let verdict = match (c.pass, c.asserted) {
                    (true, _) => "PASS",
                    (false, true) => "FAIL",
                    (false, false) => "WARN",
                };
                println!("{verdict} {} {:e} (threshold {:e})", c.name, c.value, c.threshold);
            }
            println!("artifacts in {}", outcome.directory.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
