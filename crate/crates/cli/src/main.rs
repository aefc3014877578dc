//! `rbmelt`: forward runs, gradient checks, optimization campaigns and plot
//! data for the melting Rayleigh-Benard control problem.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbmelt::io::{Profile, RunConfig};

use commands::Method;

#[derive(Parser)]
#[command(name = "rbmelt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML file overriding the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in defaults to start from.
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the particle swarm.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward problem and write diagnostics and snapshots.
    Forward(Common),
    /// Compare the adjoint gradient with central differences.
    Gradcheck(Common),
    /// Optimize the wall temperature.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "lbfgs")]
        method: Method,
    },
    /// Collect campaign outputs into long-format CSV.
    Plotdata {
        /// Campaign directory, or a directory of campaigns.
        dir: PathBuf,
    },
}

fn load(common: &Common) -> rbmelt::Result<RunConfig> {
    let profile: Profile = common.profile.parse()?;
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| rbmelt::Error::Domain(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(profile, &text)?
        }
        None => RunConfig::profile(profile),
    };
    if let Some(seed) = common.seed {
        cfg.pso.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> rbmelt::Result<()> {
    match cli.command {
        Command::Forward(c) => commands::forward(&load(&c)?, &c.out),
        Command::Gradcheck(c) => commands::gradcheck(&load(&c)?, &c.out),
        Command::Optimize { common, method } => commands::optimize(&load(&common)?, &common.out, method),
        Command::Plotdata { dir } => commands::plotdata(&dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
