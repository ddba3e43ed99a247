mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::Output;

#[derive(Parser)]
#[command(name = "tbdf", version, about = "Positive-temperature Bogoliubov-Dirac-Fock solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "tbdf-out")]
    out: PathBuf,
    /// Seed of the randomized suites (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel k- and x-sampling.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the translation-invariant vacuum equation.
    FreeVacuum,
    /// Tabulate the polarization kernel by both routes and the screening kernels.
    Response,
    /// Linearized screening of a radial external density.
    Screen,
    /// Self-consistent box solver in reduced or full mode.
    Box,
    /// Run all seeded invariant suites.
    Check {
        /// Deliberately break the Klein inequality check (harness self-test).
        #[arg(long)]
        inject_klein_fault: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::FreeVacuum => "free-vacuum",
            Command::Response => "response",
            Command::Screen => "screen",
            Command::Box => "box",
            Command::Check { .. } => "check",
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let name = cli.command.name();
    if !cfg.command.is_empty() && cfg.command != name {
        return Err(CliError::Validation(format!(
            "configuration is for '{}', not '{name}'",
            cfg.command
        )));
    }
    cfg.command = name.to_string();
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let mut out = Output::new(&cli.out, &cfg)?;
    let result = match &cli.command {
        Command::FreeVacuum => commands::free_vacuum(&cfg, &mut out),
        Command::Response => commands::response(&cfg, &mut out),
        Command::Screen => commands::screen(&cfg, &mut out),
        Command::Box => commands::box_run(&cfg, &mut out),
        Command::Check { inject_klein_fault } => commands::check(&cfg, *inject_klein_fault, &mut out),
    };
    for path in out.written() {
        eprintln!("wrote {}", path.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
