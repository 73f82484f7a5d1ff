//! Command-line driver for the search structures, predictors and
//! simulators in `neighborly`.
//!
//! Every subcommand writes line-delimited JSON records to `--output` (or
//! stdout). A run is fully determined by its flags and the root seed, which
//! comes from `--seed` unless the `NEIGHBORLY_SEED` environment variable is
//! set.
//!
//! Exit status is 0 on success, 2 for unparsable flags or input files, 3 for
//! infeasible theory parameters (after writing an `infeasible` record) and 1
//! for any other failure.

use std::env::VarError;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub mod commands;
pub mod data;
pub mod error;
pub mod report;

pub use error::{CliError, CliResult};
pub use report::Report;

pub const SEED_ENV: &str = "NEIGHBORLY_SEED";

#[derive(Debug, Parser)]
#[command(name = "neighborly", version, about = "Nearest neighbor search, prediction and simulation experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Root seed. NEIGHBORLY_SEED takes precedence when set.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Report measured times. Without it every time field is 0 so that
    /// reruns are byte-identical.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Query a search index and score it against brute force.
    BenchSearch(commands::bench_search::BenchSearchArgs),
    /// Predict labels for query points from a labeled dataset.
    Query(commands::query::QueryArgs),
    /// Monte Carlo checks of the Hamming LSH family and indexes.
    VerifyLsh(commands::verify_lsh::VerifyLshArgs),
    /// Monte Carlo checks of the finite-sample guarantees.
    VerifyBounds(commands::verify_bounds::VerifyBoundsArgs),
    /// Error versus observed horizon on the latent-source time series model.
    TsExperiment(commands::ts_experiment::TsExperimentArgs),
    /// Cumulative reward of recommendation policies on the latent-cluster model.
    CfExperiment(commands::cf_experiment::CfExperimentArgs),
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn resolve_seed(flag: u64) -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| error::usage(format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer"))),
        Err(VarError::NotPresent) => Ok(flag),
        Err(VarError::NotUnicode(_)) => Err(error::usage(format!("{SEED_ENV} is not valid unicode"))),
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let seed = resolve_seed(cli.global.seed)?;
    let out: Box<dyn Write> = match &cli.global.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    let mut report = Report::new(out, seed, cli.global.timing);
    let result = commands::dispatch(&cli.command, &mut report);
    if let Err(CliError::Infeasible(reason)) = &result {
        report.emit(json!({ "record": "infeasible", "reason": reason }))?;
    }
    report.flush()?;
    result
}
