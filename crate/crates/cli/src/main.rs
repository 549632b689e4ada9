use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tempora_cli::commands;
use tempora_cli::{CliError, Outcome, RunConfig};

/// SICA dynamics on time scales: simulate, certify and audit.
#[derive(Parser)]
#[command(name = "tempora", version, about)]
struct Cli {
    /// Print the parsed configuration in canonical form and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Permanence bounds, stability certificate and H1/H2 verdicts.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the trajectory and write it as CSV.
    Simulate {
        config: PathBuf,
        /// Also write one SVG chart per compartment.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two runs whose initial states differ by a relative perturbation.
    StabilityDemo {
        config: PathBuf,
        #[arg(long)]
        perturb: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the built-in Morocco example against its published constants.
    ReproduceExample {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    Ok(RunConfig::from_file(path)?)
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let dump = cli.dump_config;
    match cli.command {
        Command::Analyze { config, out } => {
            let cfg = load(&config)?;
            if dump {
                return Ok(commands::dump_config(&cfg));
            }
            commands::analyze(&cfg, out.as_deref())
        }
        Command::Simulate { config, svg, out } => {
            let cfg = load(&config)?;
            if dump {
                return Ok(commands::dump_config(&cfg));
            }
            commands::simulate_cmd(&cfg, out.as_deref(), svg)
        }
        Command::StabilityDemo { config, perturb, out } => {
            let cfg = load(&config)?;
            if dump {
                return Ok(commands::dump_config(&cfg));
            }
            commands::stability_demo(&cfg, perturb, out.as_deref())
        }
        Command::ReproduceExample { out } => commands::reproduce_example(out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
