//! `manipkit`: contact proposals, mask metrics and articulated-object
//! policy simulation from the command line.

mod bench;
mod error;
mod metrics;
mod overlay;
mod propose;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use manipkit_core::sim::suite;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "manipkit", version, about = "Suction contact proposals and articulated-object policy evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pick a contact pixel and pull direction on a part mask
    Propose(propose::ProposeArgs),
    /// Score predicted masks against ground truth
    Metrics(metrics::MetricsArgs),
    /// Run one policy on one scene
    Simulate(simulate::SimulateArgs),
    /// Run policies over a scene suite
    Bench(bench::BenchArgs),
    /// Write a bundled scene suite as JSON files
    GenSuite(GenSuiteArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteName {
    Desk,
    HingeDoors,
}

#[derive(Debug, clap::Args)]
struct GenSuiteArgs {
    #[arg(long, value_enum)]
    suite: SuiteName,
    #[arg(long)]
    out: PathBuf,
}

fn gen_suite(args: &GenSuiteArgs) -> CliResult<()> {
    let scenes = match args.suite {
        SuiteName::Desk => suite::desk_suite(),
        SuiteName::HingeDoors => suite::hinge_door_suite(),
    };
    suite::write_suite(&args.out, &scenes).map_err(|e| CliError::input(format!("{}: {e}", args.out.display())))?;
    let n: usize = scenes.values().map(Vec::len).sum();
    println!("wrote {n} scenes to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Propose(a) => propose::run(a),
        Command::Metrics(a) => metrics::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Bench(a) => bench::run(a),
        Command::GenSuite(a) => gen_suite(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
