//! `fundata` - file-in/file-out front end for the functional data toolkit.
//!
//! Every subcommand is a pure function of its input files, flags and seed:
//! identical invocations produce byte-identical outputs. Exit codes: 0 on
//! success, 2 on usage errors (flag parsing), 1 on runtime failures with a
//! machine-readable `error: ...` line on stderr.

mod commands;
mod svg;

use clap::{Parser, Subcommand};

use commands::{convert, fcubt, fpca, moments, plot, simulate, smooth};

#[derive(Parser)]
#[command(name = "fundata", version, about = "Functional data analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate functional data (Karhunen-Loeve expansions, Brownian paths)
    Simulate(simulate::SimulateArgs),
    /// Smooth curves with a local polynomial estimator
    Smooth(smooth::SmoothArgs),
    /// Estimate mean and covariance functions
    Moments(moments::MomentsArgs),
    /// Functional principal component analysis (fit, transform, inverse)
    Fpca(fpca::FpcaArgs),
    /// Grow (and optionally join) a clustering tree
    Fcubt(fcubt::FcubtArgs),
    /// Render curves as an SVG file
    Plot(plot::PlotArgs),
    /// Convert between dense/irregular CSV and ts formats
    Convert(convert::ConvertArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Smooth(args) => smooth::run(args),
        Command::Moments(args) => moments::run(args),
        Command::Fpca(args) => fpca::run(args),
        Command::Fcubt(args) => fcubt::run(args),
        Command::Plot(args) => plot::run(args),
        Command::Convert(args) => convert::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
