pub mod bench_search;
pub mod cf_experiment;
pub mod query;
pub mod ts_experiment;
pub mod verify_bounds;
pub mod verify_lsh;

use neighborly::seed::derive_rng;
use neighborly::{LabeledDataset, Point};

use crate::error::CliResult;
use crate::report::Report;
use crate::Command;

pub fn dispatch(command: &Command, report: &mut Report) -> CliResult<()> {
    match command {
        Command::BenchSearch(a) => bench_search::run(a, report),
        Command::Query(a) => query::run(a, report),
        Command::VerifyLsh(a) => verify_lsh::run(a, report),
        Command::VerifyBounds(a) => verify_bounds::run(a, report),
        Command::TsExperiment(a) => ts_experiment::run(a, report),
        Command::CfExperiment(a) => cf_experiment::run(a, report),
    }
}

/// Dataset whose tie-breaking priorities come from the run seed.
pub(crate) fn dataset<P: Point>(points: Vec<P>, labels: Option<Vec<f64>>, seed: u64) -> CliResult<LabeledDataset<P>> {
    Ok(LabeledDataset::new(points, labels, &mut derive_rng(seed, "priorities", 0))?)
}
