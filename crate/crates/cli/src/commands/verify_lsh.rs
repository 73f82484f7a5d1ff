use std::sync::Arc;

use clap::{Args, ValueEnum};
use neighborly::exact::brute_force_knn;
use neighborly::lsh::{
    build_lsh_index, collision_prob_estimate, column_collision_estimate, lsh_params, AmplifiedHasher, LshFamilyParams,
    RadiusLadder,
};
use neighborly::seed::derive_rng;
use neighborly::synth::{flip_bits, planted_hamming, random_bits};
use neighborly::{hamming, par, LabeledDataset};
use serde_json::{json, Value};

use crate::error::{usage, CliResult};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Single-bit collision rate against `1 − ρ/d`.
    Collision,
    /// Collision rate of a `rows`-bit key against `(1 − ρ/d)^rows`.
    Column,
    /// Recovery of a planted near neighbor by one index.
    Planted,
    /// Approximate nearest neighbor through the radius ladder.
    Ladder,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyLshArgs {
    #[arg(long, value_enum, default_value_t = Check::Planted)]
    pub check: Check,
    /// Bit dimension. Defaults: 100 for collision checks, 110 planted, 64 ladder.
    #[arg(long)]
    pub d: Option<usize>,
    /// Dataset size. Defaults: 1024 planted, 256 ladder.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    /// Near radius of the planted check. Defaults to 5d/11, rounded down.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Hash draws per collision estimate.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    /// Bits per key for --check column.
    #[arg(long, default_value_t = 3)]
    pub rows: usize,
}

pub fn run(args: &VerifyLshArgs, report: &mut Report) -> CliResult<()> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let seed = report.seed();
    let rows: Vec<neighborly::Result<Value>> = match args.check {
        Check::Collision | Check::Column => {
            let d = args.d.unwrap_or(100);
            let rows = if args.check == Check::Column { args.rows } else { 1 };
            par::map_indexed(args.trials, |t| collision_trial(args, d, rows, seed, t))
        }
        Check::Planted => {
            let d = args.d.unwrap_or(110);
            let n = args.n.unwrap_or(1024);
            let radius = args.radius.unwrap_or(5 * d / 11);
            let far = (args.c * radius as f64).ceil() as usize;
            if radius == 0 || far > d {
                return Err(usage("--radius must be positive with c·radius at most --d"));
            }
            let family = LshFamilyParams::hamming(d, radius as f64, args.c)?;
            let params = lsh_params(family.p1, family.p2, n, args.delta)?;
            report.emit(json!({
                "record": "params",
                "d": d,
                "n": n,
                "radius": radius,
                "c": args.c,
                "p1": family.p1,
                "p2": family.p2,
                "rows": params.rows,
                "tables": params.tables,
                "phi": params.phi,
            }))?;
            par::map_indexed(args.trials, |t| {
                let mut rng = derive_rng(seed, "verify-lsh-planted", t as u64);
                let (pts, q, planted) = planted_hamming(d, n, radius, far, &mut rng)?;
                let ds = Arc::new(LabeledDataset::new(pts, None, &mut rng)?);
                let index = build_lsh_index(ds.clone(), AmplifiedHasher::from_params(d, &params, &mut rng)?)?;
                let found = index.query_near(&q, args.c * radius as f64)?;
                let truth = brute_force_knn(&ds, &q, 1)?[0];
                let verified = found.hit.map(|h| hamming(ds.point(h.index), &q).map(|x| x as f64 == h.distance));
                Ok(json!({
                    "record": "trial",
                    "trial": t,
                    "found_distance": found.hit.map(|h| h.distance),
                    "true_distance": truth.distance,
                    "planted_distance": hamming(ds.point(planted), &q)?,
                    "candidates": found.candidates,
                    "success": found.hit.is_some_and(|h| h.index == planted),
                    "distance_verified": verified.transpose()?.unwrap_or(true),
                }))
            })
        }
        Check::Ladder => {
            let d = args.d.unwrap_or(64);
            let n = args.n.unwrap_or(256);
            let bound = args.c * (1.0 + args.gamma);
            par::map_indexed(args.trials, |t| {
                let mut rng = derive_rng(seed, "verify-lsh-ladder", t as u64);
                let ds = Arc::new(LabeledDataset::new(random_bits(n, d, &mut rng)?, None, &mut rng)?);
                let q = flip_bits(ds.point(t % n), 1 + t % 8, &mut rng);
                let truth = brute_force_knn(&ds, &q, 1)?[0].distance;
                let ladder = RadiusLadder::build(ds.clone(), args.c, args.gamma, args.delta, &mut rng)?;
                let (found, candidates) = match ladder.query(&q) {
                    Ok((hit, scanned)) => (Some(hit.distance), scanned),
                    Err(neighborly::Error::LadderExhausted) => (None, 0),
                    Err(e) => return Err(e),
                };
                Ok(json!({
                    "record": "trial",
                    "trial": t,
                    "found_distance": found,
                    "true_distance": truth,
                    "candidates": candidates,
                    "rungs": ladder.radii().count(),
                    "success": found.is_some_and(|f| f <= bound * truth),
                }))
            })
        }
    };

    let mut successes = 0usize;
    let mut max_err: f64 = 0.0;
    let mut candidates = 0.0;
    for row in rows {
        let row = row?;
        successes += row["success"].as_bool().unwrap_or(false) as usize;
        max_err = max_err.max(row["abs_error"].as_f64().unwrap_or(0.0));
        candidates += row["candidates"].as_f64().unwrap_or(0.0);
        report.emit(row)?;
    }
    let t = args.trials as f64;
    let mut summary = json!({
        "record": "summary",
        "check": args.check.to_possible_value().expect("no skipped variants").get_name(),
        "trials": args.trials,
    });
    match args.check {
        Check::Collision | Check::Column => summary["max_abs_error"] = max_err.into(),
        Check::Planted | Check::Ladder => {
            summary["success_fraction"] = (successes as f64 / t).into();
            summary["mean_candidates"] = (candidates / t).into();
        }
    }
    report.emit(summary)?;
    Ok(())
}

fn collision_trial(args: &VerifyLshArgs, d: usize, rows: usize, seed: u64, t: usize) -> neighborly::Result<Value> {
    let mut rng = derive_rng(seed, "verify-lsh-collision", t as u64);
    let pts = random_bits(2, d, &mut rng)?;
    let rho = hamming(&pts[0], &pts[1])? as f64;
    let p = 1.0 - rho / d as f64;
    let expected = p.powi(rows as i32);
    let estimate = if rows == 1 {
        collision_prob_estimate(&pts[0], &pts[1], args.draws, &mut rng)?
    } else {
        column_collision_estimate(&pts[0], &pts[1], rows, args.draws, &mut rng)?
    };
    Ok(json!({
        "record": "trial",
        "trial": t,
        "distance": rho,
        "rows": rows,
        "expected": expected,
        "estimate": estimate,
        "abs_error": (estimate - expected).abs(),
    }))
}
