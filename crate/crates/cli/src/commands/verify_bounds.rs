use clap::{Args, ValueEnum};
use neighborly::tslatent::{
    knn_guarantee_harness, plan_knn_guarantee, separation_accuracy_spearman, separation_sweep, SeparationSweepConfig,
    TheoryParams,
};
use serde_json::json;

use crate::error::{usage, CliResult};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bound {
    /// Pointwise k-NN regression error at an interior point.
    #[value(name = "pointwise-knn", alias = "3.3")]
    PointwiseKnn,
    /// Kernel classification accuracy against training-set separation.
    #[value(name = "separation", alias = "5.2")]
    Separation,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyBoundsArgs {
    #[arg(long, value_enum)]
    pub theorem: Bound,
    /// Hölder constant of the regression function.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Hölder exponent.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    /// Sample size; the smallest admissible one when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    /// Neighbor count; the smallest admissible one when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    /// Noise levels for --theorem separation.
    #[arg(long, value_delimiter = ',', default_value = "0.5,2,4,6,8,11,15")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 4)]
    pub r: usize,
    #[arg(long, default_value_t = 40)]
    pub n_train: usize,
    #[arg(long, default_value_t = 100)]
    pub n_test: usize,
    #[arg(long, default_value_t = 30)]
    pub horizon: usize,
    #[arg(long, default_value_t = 3)]
    pub dmax: usize,
    #[arg(long, default_value_t = 3.0)]
    pub smooth_scale: f64,
}

pub fn run(args: &VerifyBoundsArgs, report: &mut Report) -> CliResult<()> {
    match args.theorem {
        Bound::PointwiseKnn => pointwise_knn(args, report),
        Bound::Separation => separation(args, report),
    }
}

fn pointwise_knn(args: &VerifyBoundsArgs, report: &mut Report) -> CliResult<()> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let tp = TheoryParams {
        c: args.c,
        alpha: args.alpha,
        eps: args.eps,
        delta: args.delta,
        p_min: 1.0,
        dim: 1,
    };
    let plan = plan_knn_guarantee(&tp, args.n, args.k)?;
    report.emit(json!({
        "record": "plan",
        "n": plan.n,
        "k": plan.k,
        "h_star": plan.h_star,
        "ball_mass": plan.ball_mass,
        "k_lower": plan.k_lower,
        "k_upper": plan.k_upper,
        "n_lower": plan.n_lower,
        "compliant": plan.compliant,
    }))?;
    let result = knn_guarantee_harness(&tp, plan, args.trials, report.seed())?;
    for (t, err) in result.errors.iter().enumerate() {
        report.emit(json!({
            "record": "trial",
            "trial": t,
            "abs_error": err,
            "success": *err <= args.eps,
        }))?;
    }
    report.emit(json!({
        "record": "summary",
        "theorem": "pointwise-knn",
        "trials": result.trials,
        "successes": result.successes,
        "success_fraction": result.success_fraction(),
        "target": 1.0 - args.delta,
        "eta_at_query": result.eta_at_query,
        "n": plan.n,
        "k": plan.k,
        "compliant": plan.compliant,
    }))?;
    Ok(())
}

fn separation(args: &VerifyBoundsArgs, report: &mut Report) -> CliResult<()> {
    if args.sigmas.is_empty() || args.repeats == 0 || args.n_test == 0 {
        return Err(usage("need at least one sigma, one repeat and one test series"));
    }
    let cfg = SeparationSweepConfig {
        r: args.r,
        n_train: args.n_train,
        n_test: args.n_test,
        horizon: args.horizon,
        max_shift: args.dmax,
        smooth_scale: args.smooth_scale,
        sigmas: args.sigmas.clone(),
        repeats: args.repeats,
    };
    let points = separation_sweep(&cfg, report.seed())?;
    for p in &points {
        report.emit(json!({
            "record": "point",
            "sigma": p.sigma,
            "repeat": p.repeat,
            "separation": p.separation,
            "normalized_separation": p.normalized_separation,
            "accuracy": p.accuracy,
        }))?;
    }
    report.emit(json!({
        "record": "summary",
        "theorem": "separation",
        "points": points.len(),
        "spearman": separation_accuracy_spearman(&points),
    }))?;
    Ok(())
}
