//! Command-line front end for the two-mode photon-counting toolkit: generate
//! synthetic fringe scans, fit their visibilities, compare the two
//! overlap-ratio extraction routes, compile detector networks for arbitrary
//! target states, and tabulate phase-metrology scaling.
//!
//! Exit codes: 0 on success, 1 on any input or validation problem (bad
//! flags, schema violations, malformed files, out-of-range parameters), and
//! 2 when a computation itself fails to converge or leaves the finite range.

mod analyze;
mod csvio;
mod fit;
mod manifest;
mod metrology;
mod simulate;
mod synth;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "noonsim", version, about = "Two-mode photon-counting toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic counts CSV from a JSON experiment config
    Simulate(simulate::SimulateArgs),
    /// Least-squares fringe fits for every series in a counts CSV
    Fit(fit::FitArgs),
    /// Extract the pair-overlap ratio E/A via both routes
    Analyze {
        #[command(subcommand)]
        mode: analyze::AnalyzeCmd,
    },
    /// Compile a target state into a detector network
    Synth(synth::SynthArgs),
    /// Tabulate projection success, orthogonal phase, and uncertainty vs N
    Metrology(metrology::MetrologyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Fit(args) => fit::run(args),
        Command::Analyze { mode } => analyze::run(mode),
        Command::Synth(args) => synth::run(args),
        Command::Metrology(args) => metrology::run(args),
    }
}

/// Validation problems exit 1; numerical failures (a solver that did not
/// converge, no orthogonal phase, non-finite intermediates) exit 2.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<noonsim::Error>() {
        Some(noonsim::Error::NoConvergence { .. })
        | Some(noonsim::Error::NoOrthogonalPhase { .. })
        | Some(noonsim::Error::NonFinite { .. }) => 2,
        _ => 1,
    }
}
