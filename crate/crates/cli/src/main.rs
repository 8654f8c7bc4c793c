//! Command-line surface of the diffusion laboratory: forward-chain noising
//! runs, osmosis filtering runs, chain-vs-PDE comparisons, and entropy
//! schedule reports. All outputs (PNM frames, CSV logs) are byte-reproducible
//! from the flags; seeds are explicit and nothing depends on wall-clock time.

mod commands;
mod metrics;
mod pnm;
mod transforms;

use clap::{Parser, Subcommand};

use commands::entropy_report::EntropyReportArgs;
use commands::fp_compare::FpCompareArgs;
use commands::osmosis::OsmosisArgs;
use commands::probdiff::ProbdiffArgs;

#[derive(Debug, Parser)]
#[command(
    name = "driftscale",
    version,
    about = "Numerical laboratory for diffusion scale-spaces: noising chains, \
             Fokker-Planck solves, and osmosis filtering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward noising chain: recorded frames plus an entropy log.
    Probdiff(ProbdiffArgs),
    /// Osmosis drift-diffusion filtering towards a guidance image.
    Osmosis(OsmosisArgs),
    /// Monte-Carlo chain vs Fokker-Planck PDE histogram distances.
    FpCompare(FpCompareArgs),
    /// Closed-form entropy Lyapunov report for a noise schedule.
    EntropyReport(EntropyReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Probdiff(args) => commands::probdiff::run(args),
        Command::Osmosis(args) => commands::osmosis::run(args),
        Command::FpCompare(args) => commands::fp_compare::run(args),
        Command::EntropyReport(args) => commands::entropy_report::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
