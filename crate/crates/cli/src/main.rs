//! `liouville`: run open-system experiments described in TOML files.

mod config;
mod error;
mod presets;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Loaded;
use crate::error::CliError;

/// Environment variable fixing the size of the worker pool.
const THREADS_VAR: &str = "LIOUVILLE_THREADS";

#[derive(Parser)]
#[command(name = "liouville", version, about = "Lindblad master equations, trajectories and error-correction cycle maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment configuration.
    Run { config: PathBuf },
    /// Run a shipped scenario, optionally overriding keys (`--set grid.dt=0.01`).
    Preset {
        name: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List the shipped scenarios with their default parameters.
    ListPresets,
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| CliError::schema(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
        if n == 0 {
            return Err(CliError::schema(format!("{THREADS_VAR} must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn report(summary: &run::RunSummary) {
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", summary.metadata.display());
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            init_threads()?;
            report(&run::run(&Loaded::from_file(&config)?)?);
        }
        Command::Preset { name, set } => {
            init_threads()?;
            let loaded = presets::resolve(presets::find(&name)?, &set)?;
            report(&run::run(&loaded)?);
        }
        Command::ListPresets => {
            for p in presets::PRESETS {
                println!("{} (figure {}): {}", p.name, p.figure, p.description);
                for line in presets::defaults(p) {
                    println!("    {line}");
                }
            }
        }
        Command::Validate { config } => {
            Loaded::from_file(&config)?;
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
