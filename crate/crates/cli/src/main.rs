//! `hexdos`: density of states and magnetic oscillations on the hexagonal
//! quantum graph, from the command line.
//!
//! Every subcommand writes one CSV table to `--out-dir` (or stdout). The
//! table starts with `#` lines holding the tool version, the config hash,
//! the merged config and the column schema.

mod commands;
mod config;
mod error;
mod output;
mod setup;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "hexdos",
    version,
    about = "Landau levels and de Haas-van Alphen oscillations on hexagonal quantum graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Spectral bands of the edge operator with their Dirac points.
    Bands,
    /// Landau levels of one band next to the perfect-cone ladder.
    Landau,
    /// Smoothed semiclassical density of states.
    Dos,
    /// Magnetization along a flux sweep.
    Magnetization,
    /// Magnetic band edges for every reduced p/q.
    Butterfly,
    /// Semiclassical and spectral magnetization on a shared sweep.
    Compare,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    hexdos::init_threads().map_err(|e| CliError::Config(e.to_string()))?;
    let table = match cli.command {
        Command::Bands => commands::bands(&cfg)?,
        Command::Landau => commands::landau(&cfg)?,
        Command::Dos => commands::dos(&cfg)?,
        Command::Magnetization => commands::magnetization(&cfg)?,
        Command::Butterfly => commands::butterfly_cmd(&cfg)?,
        Command::Compare => commands::compare(&cfg)?,
    };
    table.emit(&cfg)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("hexdos: {e}");
        std::process::exit(e.exit_code());
    }
}
