use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tendonsim_cli::scenario::{parse_scenario, BUNDLED};
use tendonsim_cli::{execute, load_scenario, resolve, CliError};

#[derive(Parser)]
#[command(name = "tendonsim", version, about = "Quasi-static tendon and ligament simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or bundled scenario and write CSV (and SVG).
    Run {
        /// Path to a scenario TOML, or the name of a bundled scenario.
        scenario: String,
        /// Output directory.
        #[arg(long, env = "TENDONSIM_OUT", default_value = ".")]
        out: PathBuf,
        /// Also write an SVG plot.
        #[arg(long)]
        svg: bool,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List bundled scenarios.
    List,
    /// Check a scenario file against its schema.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tendonsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            scenario,
            out,
            svg,
            seed,
        } => {
            let scenario = resolve(&scenario)?;
            let (result, written) = execute(&scenario, &out, svg, seed)?;
            for line in &result.summary {
                println!("{line}");
            }
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::List => {
            for b in BUNDLED {
                let s = parse_scenario(b.text)?;
                println!("{:<20} {}", b.name, s.kind());
            }
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            println!("{}: ok ({})", s.name, s.kind());
        }
    }
    Ok(())
}
