mod commands;
mod config;
mod error;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, FlagValues, Settings};
use error::CliError;

#[derive(Parser)]
#[command(name = "misspec-learn", version, about = "Conservative belief updating in misspecified finite models")]
struct Cli {
    /// TOML file whose keys mirror the long flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Components of the limit set, mixture set and structural flags.
    Analyze(Flags),
    /// Stochastic belief paths, one CSV per schedule and seed.
    Simulate {
        #[command(flatten)]
        flags: Flags,
        /// Accept a prior with zero entries.
        #[arg(long)]
        allow_boundary: bool,
    },
    /// Integrate the mean-field ODE.
    Flow(Flags),
    /// Occupation measures of constant-weight runs.
    Occupation(Flags),
    /// Re-run a named worked example and report PASS/FAIL per assertion.
    Reproduce {
        /// Scenario id, or `all`.
        #[arg(required_unless_present = "list")]
        id: Option<String>,
        /// List the scenario ids.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args, Default)]
struct Flags {
    /// Model file (TOML).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Weight schedule, e.g. `power:1` or `constant:0.05`; repeatable.
    #[arg(long)]
    schedule: Vec<String>,
    /// Initial belief, comma-separated (fractions allowed).
    #[arg(long)]
    q0: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma-separated constant weights in (0, 1).
    #[arg(long)]
    gamma: Option<String>,
    /// Comma-separated TV radii around the global component.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Keep every n-th point in the output.
    #[arg(long)]
    thin: Option<u64>,
    #[arg(long)]
    bin_width: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<Flags> for FlagValues {
    fn from(f: Flags) -> Self {
        FlagValues {
            model: f.model,
            schedule: f.schedule,
            q0: f.q0,
            steps: f.steps,
            seeds: f.seeds,
            gamma: f.gamma,
            delta: f.delta,
            dt: f.dt,
            t_end: f.t_end,
            thin: f.thin,
            bin_width: f.bin_width,
            out: f.out,
        }
    }
}

fn settings(config: &Option<PathBuf>, flags: Flags) -> Result<Settings, CliError> {
    let file = config.as_deref().map(FileConfig::load).transpose()?;
    Ok(Settings::new(flags.into(), file))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(flags) => commands::analyze(&settings(&cli.config, flags)?),
        Command::Simulate { flags, allow_boundary } => {
            commands::simulate(&settings(&cli.config, flags)?, allow_boundary)
        }
        Command::Flow(flags) => commands::flow(&settings(&cli.config, flags)?),
        Command::Occupation(flags) => commands::occupation(&settings(&cli.config, flags)?),
        Command::Reproduce { list: true, .. } => {
            for (id, what) in reproduce::SCENARIOS {
                println!("{id:<20} {what}");
            }
            Ok(())
        }
        Command::Reproduce { id, .. } => {
            let id = id.unwrap_or_default();
            let failed = reproduce::run(&id, &mut std::io::stdout().lock())?;
            if failed > 0 {
                return Err(CliError::Assertion(format!("{failed} assertion(s) failed")));
            }
            Ok(())
        }
    }
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
