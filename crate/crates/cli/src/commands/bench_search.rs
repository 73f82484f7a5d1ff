use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, ValueEnum};
use neighborly::boundary::{BoundaryForest, InsertMode, DEFAULT_MAX_CHILDREN};
use neighborly::exact::{brute_force_knn, KdTree, QueryMode, SplitRule};
use neighborly::lsh::{build_lsh_index, lsh_params, AmplifiedHasher, LshFamilyParams, RadiusLadder};
use neighborly::rptree::RpForest;
use neighborly::seed::derive_rng;
use neighborly::synth::{manifold_points, random_bits, two_gaussians, uniform_points};
use neighborly::{par, BitVector, LabeledDataset, NeighborHit, Point, RealVector};
use serde_json::{json, Value};

use crate::data::{load_bits, load_points};
use crate::error::{usage, CliResult};
use crate::report::{millis, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IndexKind {
    Brute,
    Kdtree,
    RpForest,
    BoundaryForest,
    Lsh,
    Ladder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Points,
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Synthetic {
    Uniform,
    Manifold,
    TwoGaussians,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Defeatist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Rotate,
    MaxSpread,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Args)]
pub struct BenchSearchArgs {
    #[arg(long, value_enum, default_value_t = IndexKind::Kdtree)]
    pub index: IndexKind,
    /// Dataset file. Without it a synthetic dataset is generated.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Query file. Without it the dataset points themselves are queried,
    /// unless --n-queries asks for fresh synthetic queries.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Points)]
    pub format: Format,
    /// The last column of the dataset file holds labels.
    #[arg(long)]
    pub labeled: bool,
    #[arg(long, value_enum, default_value_t = Synthetic::Uniform)]
    pub synthetic: Synthetic,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Intrinsic dimension of the manifold dataset.
    #[arg(long, default_value_t = 3)]
    pub intrinsic: usize,
    /// Distance between the two Gaussian means.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long)]
    pub n_queries: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 10)]
    pub leaf_size: usize,
    #[arg(long, value_enum, default_value_t = Split::Rotate)]
    pub split: Split,
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_CHILDREN)]
    pub max_children: usize,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub edit: Toggle,
    /// Near-neighbor radius for --index lsh.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
}

impl IndexKind {
    fn name(self) -> &'static str {
        match self {
            IndexKind::Brute => "brute",
            IndexKind::Kdtree => "kdtree",
            IndexKind::RpForest => "rp-forest",
            IndexKind::BoundaryForest => "boundary-forest",
            IndexKind::Lsh => "lsh",
            IndexKind::Ladder => "ladder",
        }
    }
}

/// What an index returned for one query.
struct Answer {
    /// Distances of the returned neighbors, nearest first.
    distances: Vec<f64>,
    /// Distance evaluations, candidates or nodes touched, by index type.
    work: usize,
    predicted: Option<f64>,
}

impl Answer {
    fn from_hits(hits: &[NeighborHit], work: usize) -> Self {
        Answer {
            distances: hits.iter().map(|h| h.distance).collect(),
            work,
            predicted: None,
        }
    }
}

type Searcher<'a, P> = Box<dyn Fn(&P) -> neighborly::Result<Answer> + Sync + Send + 'a>;

pub fn run(args: &BenchSearchArgs, report: &mut Report) -> CliResult<()> {
    if args.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let single = matches!(args.index, IndexKind::BoundaryForest | IndexKind::Lsh | IndexKind::Ladder);
    if single && args.k != 1 {
        return Err(usage(format!("--index {} returns a single neighbor; use --k 1", args.index.name())));
    }
    match args.format {
        Format::Points => run_real(args, report),
        Format::Bits => run_bits(args, report),
    }
}

fn run_real(args: &BenchSearchArgs, report: &mut Report) -> CliResult<()> {
    let seed = report.seed();
    let (points, labels) = match &args.data {
        Some(path) => {
            let f = load_points(path, args.labeled)?;
            (f.points, f.labels)
        }
        None => synth_real(args, args.n, &mut derive_rng(seed, "bench-data", 0))?,
    };
    let queries = match (&args.queries, args.n_queries) {
        (Some(path), _) => load_points(path, false)?.points,
        (None, Some(m)) if args.data.is_none() => synth_real(args, m, &mut derive_rng(seed, "bench-queries", 0))?.0,
        (None, Some(_)) => return Err(usage("--n-queries needs a synthetic dataset; pass --queries instead")),
        (None, None) => points.clone(),
    };
    let ds = Arc::new(super::dataset(points, labels, seed)?);
    for q in &queries {
        ds.check_query(q)?;
    }
    let build_start = Instant::now();
    let searcher: Searcher<'_, RealVector> = match args.index {
        IndexKind::Brute => brute_searcher(ds.clone(), args.k),
        IndexKind::Kdtree => {
            let rule = match args.split {
                Split::Rotate => SplitRule::Rotate,
                Split::MaxSpread => SplitRule::MaxSpread,
            };
            let tree = KdTree::build(ds.clone(), args.leaf_size, rule)?;
            let mode = match args.mode {
                Mode::Exact => QueryMode::Exact,
                Mode::Defeatist => QueryMode::Defeatist,
            };
            let k = args.k;
            Box::new(move |q| {
                let (hits, stats) = tree.knn_with_stats(q, k, mode)?;
                Ok(Answer::from_hits(&hits, stats.distance_evals))
            })
        }
        IndexKind::RpForest => {
            let forest = RpForest::build(ds.clone(), args.leaf_size, args.trees, seed)?;
            let k = args.k;
            Box::new(move |q| {
                let (hits, scanned) = forest.query_with_candidates(q, k)?;
                Ok(Answer::from_hits(&hits, scanned))
            })
        }
        IndexKind::BoundaryForest => boundary_searcher(args, &ds, seed)?,
        IndexKind::Lsh | IndexKind::Ladder => {
            return Err(usage(format!("--index {} needs --format bits", args.index.name())))
        }
    };
    let build_ms = millis(report.timing(), build_start);
    evaluate(args, &ds, &queries, &searcher, build_ms, report)
}

fn run_bits(args: &BenchSearchArgs, report: &mut Report) -> CliResult<()> {
    let seed = report.seed();
    let (points, labels) = match &args.data {
        Some(path) => (load_bits(path)?, None),
        None => (random_bits(args.n, args.d, &mut derive_rng(seed, "bench-data", 0))?, None),
    };
    let queries = match (&args.queries, args.n_queries) {
        (Some(path), _) => load_bits(path)?,
        (None, Some(m)) if args.data.is_none() => random_bits(m, args.d, &mut derive_rng(seed, "bench-queries", 0))?,
        (None, Some(_)) => return Err(usage("--n-queries needs a synthetic dataset; pass --queries instead")),
        (None, None) => points.clone(),
    };
    let ds = Arc::new(super::dataset(points, labels, seed)?);
    for q in &queries {
        ds.check_query(q)?;
    }
    let d = ds.dim().expect("nonempty");
    let build_start = Instant::now();
    let mut rng = derive_rng(seed, "bench-index", 0);
    let searcher: Searcher<'_, BitVector> = match args.index {
        IndexKind::Brute => brute_searcher(ds.clone(), args.k),
        IndexKind::BoundaryForest => boundary_searcher(args, &ds, seed)?,
        IndexKind::Lsh => {
            let radius = args.radius.ok_or_else(|| usage("--index lsh needs --radius"))?;
            let family = LshFamilyParams::hamming(d, radius, args.c)?;
            let params = lsh_params(family.p1, family.p2, ds.len(), args.delta)?;
            let index = build_lsh_index(ds.clone(), AmplifiedHasher::from_params(d, &params, &mut rng)?)?;
            let cr = args.c * radius;
            Box::new(move |q| {
                let found = index.query_near(q, cr)?;
                Ok(Answer {
                    distances: found.hit.iter().map(|h| h.distance).collect(),
                    work: found.candidates,
                    predicted: None,
                })
            })
        }
        IndexKind::Ladder => {
            let ladder = RadiusLadder::build(ds.clone(), args.c, args.gamma, args.delta, &mut rng)?;
            Box::new(move |q| match ladder.query(q) {
                Ok((hit, scanned)) => Ok(Answer::from_hits(&[hit], scanned)),
                Err(neighborly::Error::LadderExhausted) => Ok(Answer {
                    distances: Vec::new(),
                    work: 0,
                    predicted: None,
                }),
                Err(e) => Err(e),
            })
        }
        IndexKind::Kdtree | IndexKind::RpForest => {
            return Err(usage(format!("--index {} needs --format points", args.index.name())))
        }
    };
    let build_ms = millis(report.timing(), build_start);
    evaluate(args, &ds, &queries, &searcher, build_ms, report)
}

fn synth_real(
    args: &BenchSearchArgs,
    n: usize,
    rng: &mut neighborly::seed::Rng,
) -> CliResult<(Vec<RealVector>, Option<Vec<f64>>)> {
    Ok(match args.synthetic {
        Synthetic::Uniform => (uniform_points(n, args.d, rng)?, None),
        Synthetic::Manifold => (manifold_points(n, args.intrinsic, args.d, rng)?, None),
        Synthetic::TwoGaussians => {
            let (p, l) = two_gaussians(n, args.d, args.separation, rng)?;
            (p, Some(l))
        }
    })
}

fn brute_searcher<'a, P: Point + 'a>(ds: Arc<LabeledDataset<P>>, k: usize) -> Searcher<'a, P> {
    Box::new(move |q| {
        let hits = brute_force_knn(&ds, q, k)?;
        Ok(Answer::from_hits(&hits, ds.len()))
    })
}

fn boundary_searcher<'a, P: Point + 'a>(
    args: &BenchSearchArgs,
    ds: &LabeledDataset<P>,
    seed: u64,
) -> CliResult<Searcher<'a, P>> {
    let labels = ds.require_labels()?;
    let mode = match args.edit {
        Toggle::On => InsertMode::ClassificationEdit,
        Toggle::Off => InsertMode::Always,
    };
    let forest = BoundaryForest::build(ds.points(), labels, args.trees, args.max_children, mode, true, seed)?;
    Ok(Box::new(move |q| {
        let votes = forest.votes(q)?;
        let nearest = votes.iter().map(|v| v.distance).fold(f64::INFINITY, f64::min);
        Ok(Answer {
            distances: vec![nearest],
            work: votes.iter().map(|v| v.touched).sum(),
            predicted: Some(forest.predict(q)?),
        })
    }))
}

fn evaluate<P: Point>(
    args: &BenchSearchArgs,
    ds: &LabeledDataset<P>,
    queries: &[P],
    searcher: &Searcher<'_, P>,
    build_ms: f64,
    report: &mut Report,
) -> CliResult<()> {
    let timing = report.timing();
    let k = args.k;
    let rows = par::map_indexed(queries.len(), |i| -> neighborly::Result<(Value, f64, usize)> {
        let q = &queries[i];
        let start = Instant::now();
        let answer = searcher(q)?;
        let latency_us = millis(timing, start) * 1e3;
        let truth = brute_force_knn(ds, q, k)?;
        let kth = truth.last().expect("k >= 1").distance;
        let matched = answer.distances.iter().take(k).filter(|&&d| d <= kth).count();
        let recall = matched as f64 / k as f64;
        let mut row = json!({
            "record": "query",
            "query": i,
            "k": k,
            "recall": recall,
            "returned": answer.distances.len(),
            "distance": answer.distances.first(),
            "true_distance": truth[0].distance,
            "work": answer.work,
            "latency_us": latency_us,
        });
        if let Some(p) = answer.predicted {
            row["predicted"] = p.into();
        }
        Ok((row, recall, answer.work))
    });
    let mut recall_sum = 0.0;
    let mut work_sum = 0usize;
    for row in rows {
        let (row, recall, work) = row?;
        recall_sum += recall;
        work_sum += work;
        report.emit(row)?;
    }
    let m = queries.len() as f64;
    report.emit(json!({
        "record": "summary",
        "index": args.index.name(),
        "n": ds.len(),
        "queries": queries.len(),
        "k": k,
        "mean_recall": recall_sum / m,
        "mean_work": work_sum as f64 / m,
        "build_ms": build_ms,
    }))?;
    Ok(())
}
