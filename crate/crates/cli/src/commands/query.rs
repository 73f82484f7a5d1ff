use std::path::PathBuf;

use clap::{Args, ValueEnum};
use neighborly::predict::{
    classify_value, fixed_radius_regress, kernel_regress, knn_regress, kstar_regress, Ensemble, PartitionKernel,
    TwoLayerKnn,
};
use neighborly::{par, KernelSpec, KernelVariant};
use serde_json::{json, Value};

use crate::data::load_points;
use crate::error::{usage, CliResult};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Knn,
    Radius,
    Kernel,
    Kstar,
    TwoLayer,
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    Naive,
    Gaussian,
    TruncatedGaussian,
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    /// Labeled dataset; the last column is the label.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    /// The query file also carries labels in its last column; the report
    /// then includes errors.
    #[arg(long)]
    pub queries_labeled: bool,
    #[arg(long, value_enum, default_value_t = Method::Knn)]
    pub method: Method,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Radius for --method radius, bandwidth for --method kernel.
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = Kernel::Gaussian)]
    pub kernel: Kernel,
    /// Cutoff of the truncated Gaussian, in bandwidths.
    #[arg(long, default_value_t = 3.0)]
    pub tau: f64,
    /// Second-layer neighbor count for --method two-layer.
    #[arg(long, default_value_t = 5)]
    pub k2: usize,
    /// Multiplier on distances for --method kstar.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Exponent on scaled distances for --method kstar.
    #[arg(long, default_value_t = 1.0)]
    pub exponent: f64,
    /// Smallest region for --method partition.
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,
    /// Bagged partitions for --method partition; 0 fits a single one.
    #[arg(long, default_value_t = 0)]
    pub bags: usize,
}

struct Prediction {
    value: f64,
    support: usize,
    empty: bool,
    k_star: Option<usize>,
}

pub fn run(args: &QueryArgs, report: &mut Report) -> CliResult<()> {
    let seed = report.seed();
    let train = load_points(&args.data, true)?;
    let labels = train.labels.expect("loaded with labels");
    let ds = super::dataset(train.points, Some(labels.clone()), seed)?;
    let queries = load_points(&args.queries, args.queries_labeled)?;
    for q in &queries.points {
        ds.check_query(q)?;
    }

    let spec = match args.kernel {
        Kernel::Naive => KernelSpec::new(KernelVariant::Naive, args.h)?,
        Kernel::Gaussian => KernelSpec::new(KernelVariant::Gaussian, args.h)?,
        Kernel::TruncatedGaussian => KernelSpec::new(KernelVariant::TruncatedGaussian { tau: args.tau }, args.h)?,
    };
    let two_layer = match args.method {
        Method::TwoLayer => Some(TwoLayerKnn::fit(&ds, args.k, true)?),
        _ => None,
    };
    let partition = match args.method {
        Method::Partition if args.bags == 0 => Some(PartitionKernel::fit(&ds, args.min_leaf)?),
        _ => None,
    };
    let ensemble = match args.method {
        Method::Partition if args.bags > 0 => Some(Ensemble::bagged(&ds, args.bags, args.min_leaf, seed)?),
        _ => None,
    };
    if args.method == Method::Knn && args.k == 0 {
        return Err(usage("--k must be at least 1"));
    }

    let from = |e: neighborly::predict::RegressionEstimate| Prediction {
        value: e.value,
        support: e.support_size,
        empty: e.empty_neighborhood,
        k_star: None,
    };
    let rows = par::map_slice(&queries.points, |q| -> neighborly::Result<Prediction> {
        Ok(match args.method {
            Method::Knn => from(knn_regress(&ds, q, args.k)?),
            Method::Radius => from(fixed_radius_regress(&ds, q, args.h)?),
            Method::Kernel => from(kernel_regress(&ds, q, &spec)?),
            Method::Kstar => {
                let (est, sol) = kstar_regress(&ds, q, args.scale, args.exponent)?;
                Prediction {
                    k_star: Some(sol.k_star),
                    ..from(est)
                }
            }
            Method::TwoLayer => from(two_layer.as_ref().expect("fitted").predict(q, args.k2)?),
            Method::Partition => match (&partition, &ensemble) {
                (Some(pk), _) => {
                    let members = pk.members(pk.region_of(q)).len();
                    Prediction {
                        value: pk.predict(q),
                        support: members,
                        empty: members == 0,
                        k_star: None,
                    }
                }
                (None, Some(en)) => {
                    let w = en.weights(q)?;
                    let support = w.iter().filter(|&&x| x > 0.0).count();
                    Prediction {
                        value: w.iter().zip(&labels).map(|(w, y)| w * y).sum(),
                        support,
                        empty: support == 0,
                        k_star: None,
                    }
                }
                (None, None) => unreachable!("partition predictor fitted above"),
            },
        })
    });

    let mut sq_err = 0.0;
    let mut correct = 0usize;
    for (i, row) in rows.into_iter().enumerate() {
        let p = row?;
        let mut rec: Value = json!({
            "record": "prediction",
            "query": i,
            "value": p.value,
            "class": classify_value(p.value),
            "support_size": p.support,
            "empty_neighborhood": p.empty,
        });
        if let Some(k) = p.k_star {
            rec["k_star"] = k.into();
        }
        if let Some(truth) = queries.labels.as_ref().map(|l| l[i]) {
            rec["label"] = truth.into();
            rec["squared_error"] = ((p.value - truth) * (p.value - truth)).into();
            sq_err += (p.value - truth) * (p.value - truth);
            correct += (classify_value(p.value) as f64 == truth) as usize;
        }
        report.emit(rec)?;
    }
    let m = queries.points.len() as f64;
    let mut summary = json!({
        "record": "summary",
        "method": args.method.to_possible_value().expect("no skipped variants").get_name(),
        "queries": queries.points.len(),
    });
    if queries.labels.is_some() {
        summary["mse"] = (sq_err / m).into();
        summary["accuracy"] = (correct as f64 / m).into();
    }
    report.emit(summary)?;
    Ok(())
}
