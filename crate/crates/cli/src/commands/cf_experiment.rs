use std::collections::HashSet;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use neighborly::recsim::{
    collaborative_greedy_for, ratings_triples, run_cf_experiment, CfExperimentConfig, DistanceVariant, Policy,
    SimOutcome,
};
use serde_json::json;

use crate::data::format_ratings;
use crate::error::{usage, CliResult};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    /// Neighbors from the jointly explored items.
    CollaborativeGreedy,
    /// Neighbors from every co-rated item.
    CollaborativeGreedyCosine,
    RandomOnly,
    /// Most liked unrated item among neighbors, without exploration.
    Popularity,
    /// Recommends from the user's true cluster.
    Oracle,
}

#[derive(Debug, Clone, Args)]
pub struct CfExperimentArgs {
    /// User clusters.
    #[arg(long, default_value_t = 4)]
    pub r: usize,
    /// Items.
    #[arg(long, default_value_t = 500)]
    pub m: usize,
    /// Users.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Rating noise.
    #[arg(long, default_value_t = 0.125)]
    pub sigma: f64,
    /// Fraction of items each cluster likes.
    #[arg(long, default_value_t = 0.25)]
    pub zeta: f64,
    /// Exploration decay exponent.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Neighbor threshold; derived from the model's separation when omitted.
    #[arg(long)]
    pub h: Option<f64>,
    /// Policies to compare, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "collaborative-greedy,random-only")]
    pub policy: Vec<PolicyKind>,
    /// Time steps.
    #[arg(long = "horizon", alias = "T", default_value_t = 125)]
    pub horizon: usize,
    /// Independent model and simulation draws.
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    /// Write the final ratings of the first policy's first run as
    /// `user item rating` lines.
    #[arg(long)]
    pub ratings_out: Option<PathBuf>,
}

impl CfExperimentArgs {
    pub fn config(&self) -> CliResult<CfExperimentConfig> {
        if self.seeds == 0 || self.horizon == 0 {
            return Err(usage("--seeds and --horizon must be at least 1"));
        }
        Ok(CfExperimentConfig {
            r: self.r,
            m: self.m,
            n: self.n,
            sigma: self.sigma,
            zeta: self.zeta,
            horizon: self.horizon,
            seeds: self.seeds,
        })
    }
}

/// Recommendations that repeat an item already given to the same user.
pub fn repeat_count(outcome: &SimOutcome) -> usize {
    let mut seen = HashSet::new();
    outcome.log.iter().filter(|r| !seen.insert((r.user, r.item))).count()
}

pub fn run(args: &CfExperimentArgs, report: &mut Report) -> CliResult<()> {
    let cfg = args.config()?;
    if args.policy.is_empty() {
        return Err(usage("--policy needs at least one policy"));
    }
    let seed = report.seed();
    for (p, &kind) in args.policy.iter().enumerate() {
        let factory = |model: &neighborly::recsim::LatentCfModel| -> neighborly::Result<Policy> {
            let neighbors_h = |h: Option<f64>| match collaborative_greedy_for(model, h, args.alpha, DistanceVariant::JointCosine)? {
                Policy::CollaborativeGreedy { h, .. } => Ok(h),
                _ => unreachable!(),
            };
            match kind {
                PolicyKind::CollaborativeGreedy => collaborative_greedy_for(model, args.h, args.alpha, DistanceVariant::JointCosine),
                PolicyKind::CollaborativeGreedyCosine => collaborative_greedy_for(model, args.h, args.alpha, DistanceVariant::Cosine),
                PolicyKind::RandomOnly => Ok(Policy::RandomOnly),
                PolicyKind::Popularity => Ok(Policy::PopularityAmongNeighbors { h: neighbors_h(args.h)? }),
                PolicyKind::Oracle => Ok(Policy::Oracle),
            }
        };
        let outcomes = run_cf_experiment(&cfg, &factory, seed)?;
        let name = kind.to_possible_value().expect("no skipped variants").get_name().to_owned();
        if p == 0 {
            if let Some(path) = &args.ratings_out {
                std::fs::write(path, format_ratings(&ratings_triples(&outcomes[0].state)))?;
            }
        }
        let mut repeats = 0;
        for (s, outcome) in outcomes.iter().enumerate() {
            repeats += repeat_count(outcome);
            let frac = outcome.likable_fraction();
            let avg = outcome.per_user_average();
            for t in 0..cfg.horizon {
                report.emit(json!({
                    "record": "step",
                    "policy": name,
                    "seed_index": s,
                    "t": t + 1,
                    "cumulative_likable": outcome.cumulative_likable[t],
                    "per_user_reward": avg[t],
                    "likable_fraction": frac[t],
                }))?;
            }
        }
        let runs = outcomes.len() as f64;
        for t in 0..cfg.horizon {
            let mean = outcomes.iter().map(|o| o.likable_fraction()[t]).sum::<f64>() / runs;
            let reward = outcomes.iter().map(|o| o.per_user_average()[t]).sum::<f64>() / runs;
            report.emit(json!({
                "record": "summary",
                "policy": name,
                "t": t + 1,
                "mean_likable_fraction": mean,
                "mean_per_user_reward": reward,
                "runs": outcomes.len(),
            }))?;
        }
        report.emit(json!({
            "record": "invariants",
            "policy": name,
            "recommendations": outcomes.iter().map(|o| o.log.len()).sum::<usize>(),
            "repeat_recommendations": repeats,
        }))?;
    }
    Ok(())
}
