//! Command-line front end: gene-pair scans over TSV inputs, the variance
//! and sensitivity benchmarks, synthetic data export and index plots.

pub mod are;
pub mod config;
pub mod error;
pub mod index_plot;
pub mod ingest;
pub mod scan;
pub mod sensitivity;
pub mod simulate;
pub mod tsv;

use clap::{Parser, Subcommand};

pub use error::{CliResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "rkcca", version, about = "Robust kernel CCA scans and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test every gene pair for a case-control difference in kernel canonical correlation
    Scan(scan::ScanArgs),
    /// Compare influence and bootstrap variance estimates of Fisher's z
    AreBench(are::AreArgs),
    /// Sensitivity of classical and robust fits to contaminated rows
    SensitivityBench(sensitivity::SensitivityArgs),
    /// Write synthetic samples as TSV files
    Simulate(simulate::SimulateArgs),
    /// Per-observation influence values for an index plot
    IndexPlot(index_plot::IndexPlotArgs),
}

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Scan(a) => scan::run(a),
        Command::AreBench(a) => are::run(a),
        Command::SensitivityBench(a) => sensitivity::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::IndexPlot(a) => index_plot::run(a),
    }
}
