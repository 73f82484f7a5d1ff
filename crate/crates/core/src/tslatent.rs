//! Latent source model for time series: generator, shift-aware 1-NN and
//! kernel classifiers, the oracle MAP rule, separation diagnostics and the
//! empirical harnesses for the pointwise k-NN guarantee and the
//! separation/accuracy relation.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::predict::knn_regress;
use crate::seed::{derive_rng, Rng};
use crate::series::{shift_min_distances, TimeSeries};
use crate::space::{LabeledDataset, NeighborHit, RealVector};
use crate::stats;

/// Variance of the raw per-step source values before smoothing.
pub const SOURCE_VARIANCE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsModelConfig {
    /// Number of latent sources.
    pub r: usize,
    /// Longest horizon the model must support.
    pub t_max: usize,
    /// Standard deviation (in steps) of the Gaussian smoothing filter; 0
    /// leaves the raw values unsmoothed.
    pub smooth_scale: f64,
    pub sigma: f64,
    pub max_shift: usize,
}

/// Sources with labels and occurrence probabilities. Source values are
/// known on `1 − Δmax ..= T_max + 2Δmax`, enough to shift any observation
/// window by up to `Δmax` either way.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTsModel {
    sources: Vec<TimeSeries>,
    labels: Vec<u8>,
    priors: Vec<f64>,
    sigma: f64,
    max_shift: usize,
    t_max: usize,
}

impl LatentTsModel {
    pub fn new(
        sources: Vec<TimeSeries>,
        labels: Vec<u8>,
        priors: Vec<f64>,
        sigma: f64,
        max_shift: usize,
        t_max: usize,
    ) -> Result<Self> {
        let r = sources.len();
        if r < 2 {
            return Err(invalid("r", "need at least two sources"));
        }
        if labels.len() != r || priors.len() != r {
            return Err(invalid("labels/priors", "one per source"));
        }
        if labels.iter().any(|&l| l > 1) || !labels.contains(&0) || !labels.contains(&1) {
            return Err(invalid("labels", "labels must be 0/1 and include both"));
        }
        if priors.iter().any(|&p| !(p > 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("priors", "must be positive and sum to 1"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", "must be nonnegative"));
        }
        let dm = max_shift as i64;
        for s in &sources {
            s.window(1 - dm, t_max as i64 + 2 * dm)?;
        }
        Ok(LatentTsModel {
            sources,
            labels,
            priors,
            sigma,
            max_shift,
            t_max,
        })
    }

    pub fn r(&self) -> usize {
        self.sources.len()
    }

    pub fn sources(&self) -> &[TimeSeries] {
        &self.sources
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn pi_min(&self) -> f64 {
        self.priors.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn max_shift(&self) -> usize {
        self.max_shift
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }
}

/// Normalized Gaussian filter taps on `−⌈4s⌉ ..= ⌈4s⌉`.
fn smoothing_taps(scale: f64) -> Vec<f64> {
    if scale <= 0.0 {
        return vec![1.0];
    }
    let w = (4.0 * scale).ceil() as i64;
    let taps: Vec<f64> = (-w..=w).map(|j| (-(j * j) as f64 / (2.0 * scale * scale)).exp()).collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// `r` sources of i.i.d. `N(0, 100)` steps smoothed by a Gaussian filter,
/// alternately labeled 0 and 1, all equally likely.
pub fn gen_latent_sources(cfg: &TsModelConfig, rng: &mut Rng) -> Result<LatentTsModel> {
    if cfg.r < 2 {
        return Err(invalid("r", "need at least two sources"));
    }
    if !(cfg.smooth_scale >= 0.0 && cfg.smooth_scale.is_finite()) {
        return Err(invalid("smooth_scale", "must be nonnegative"));
    }
    let taps = smoothing_taps(cfg.smooth_scale);
    let half = taps.len() / 2;
    let dm = cfg.max_shift as i64;
    let origin = 1 - dm;
    let len = cfg.t_max + 3 * cfg.max_shift;
    let normal = Normal::new(0.0, SOURCE_VARIANCE.sqrt()).expect("positive variance");
    let sources = (0..cfg.r)
        .map(|_| {
            let raw: Vec<f64> = (0..len + 2 * half).map(|_| normal.sample(rng)).collect();
            let smooth = raw.windows(taps.len()).map(|w| w.iter().zip(&taps).map(|(a, b)| a * b).sum()).collect();
            TimeSeries::new(origin, smooth)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..cfg.r).map(|g| (g % 2) as u8).collect();
    let priors = vec![1.0 / cfg.r as f64; cfg.r];
    LatentTsModel::new(sources, labels, priors, cfg.sigma, cfg.max_shift, cfg.t_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsSample {
    /// Observed on `1 − Δmax ..= T_max + Δmax`.
    pub series: TimeSeries,
    pub label: u8,
    pub cluster: usize,
    pub shift: usize,
}

/// Draws a cluster from the priors, a shift uniformly from `0..=Δmax`, and
/// observes the shifted source plus `N(0, σ²)` noise.
pub fn gen_time_series(model: &LatentTsModel, n: usize, rng: &mut Rng) -> Result<Vec<TsSample>> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let dm = model.max_shift as i64;
    let from = 1 - dm;
    let to = model.t_max as i64 + dm;
    let noise = Normal::new(0.0, model.sigma).map_err(|e| invalid("sigma", e.to_string()))?;
    let cumulative: Vec<f64> = model
        .priors
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let cluster = cumulative.iter().position(|&c| u < c).unwrap_or(model.r() - 1);
            let shift = rng.random_range(0..=model.max_shift);
            let src = model.sources[cluster].window(from + shift as i64, to + shift as i64)?;
            let values = src.iter().map(|v| v + noise.sample(rng)).collect();
            Ok(TsSample {
                series: TimeSeries::new(from, values)?,
                label: model.labels[cluster],
                cluster,
                shift,
            })
        })
        .collect()
}

/// Labeled training series with fixed tie-break priorities.
#[derive(Debug, Clone)]
pub struct TsDataset {
    items: Vec<TimeSeries>,
    labels: Vec<u8>,
    priorities: Vec<f64>,
}

impl TsDataset {
    pub fn new(items: Vec<TimeSeries>, labels: Vec<u8>, rng: &mut Rng) -> Result<Self> {
        if items.len() != labels.len() {
            return Err(invalid("labels", "one per series"));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(invalid("labels", "must be 0 or 1"));
        }
        let priorities = (0..items.len()).map(|_| rng.random::<f64>()).collect();
        Ok(TsDataset {
            items,
            labels,
            priorities,
        })
    }

    pub fn from_samples(samples: Vec<TsSample>, rng: &mut Rng) -> Result<Self> {
        let (items, labels) = samples.into_iter().map(|s| (s.series, s.label)).unzip();
        Self::new(items, labels, rng)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[TimeSeries] {
        &self.items
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }
}

/// `out[i][j]` is the shift-minimized distance from `x` to training series
/// `i` over the first `horizons[j]` steps.
pub fn ts_distances(train: &TsDataset, x: &TimeSeries, horizons: &[usize], max_shift: usize) -> Result<Vec<Vec<f64>>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    train
        .items
        .iter()
        .map(|item| shift_min_distances(x, item, horizons, max_shift))
        .collect()
}

/// `ln Σ exp(a_i)`, or `−∞` for an empty input.
fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn one_nn_label(train: &TsDataset, dist: impl Fn(usize) -> f64) -> u8 {
    let best = (0..train.len())
        .map(|i| NeighborHit {
            index: i,
            distance: dist(i),
            priority: train.priorities[i],
        })
        .min_by(NeighborHit::rank_cmp)
        .expect("nonempty training set");
    train.labels[best.index]
}

/// `(ln V0, ln V1)` with `V_c = Σ_{Y_i = c} exp(−ρ_i² / 2h²)`.
fn kernel_log_votes(train: &TsDataset, h: f64, dist: impl Fn(usize) -> f64 + Copy) -> (f64, f64) {
    let votes = |label: u8| {
        log_sum_exp(
            (0..train.len())
                .filter(move |&i| train.labels[i] == label)
                .map(move |i| {
                    let d = dist(i);
                    -d * d / (2.0 * h * h)
                }),
        )
    };
    (votes(0), votes(1))
}

fn vote_decision((ln_v0, ln_v1): (f64, f64), tau: f64) -> u8 {
    (ln_v1 >= tau.ln() + ln_v0) as u8
}

/// Label of the training series nearest under the shift-minimized distance.
pub fn ts_1nn_classify(train: &TsDataset, x: &TimeSeries, t: usize, max_shift: usize) -> Result<u8> {
    let d = ts_distances(train, x, &[t], max_shift)?;
    Ok(one_nn_label(train, |i| d[i][0]))
}

/// Gaussian-weighted vote: 1 iff `V1 ≥ V0`.
pub fn ts_kernel_classify(train: &TsDataset, x: &TimeSeries, t: usize, max_shift: usize, h: f64) -> Result<u8> {
    ts_kernel_classify_biased(train, x, t, max_shift, h, 1.0)
}

/// Generalized weighted vote: 1 iff `V1 ≥ τ·V0`.
pub fn ts_kernel_classify_biased(
    train: &TsDataset,
    x: &TimeSeries,
    t: usize,
    max_shift: usize,
    h: f64,
    tau: f64,
) -> Result<u8> {
    check_bandwidth(h)?;
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be positive"));
    }
    let d = ts_distances(train, x, &[t], max_shift)?;
    Ok(vote_decision(kernel_log_votes(train, h, |i| d[i][0]), tau))
}

/// `(ln V0, ln V1)` of the kernel vote, exposed for inspection.
pub fn ts_kernel_log_votes(train: &TsDataset, x: &TimeSeries, t: usize, max_shift: usize, h: f64) -> Result<(f64, f64)> {
    check_bandwidth(h)?;
    let d = ts_distances(train, x, &[t], max_shift)?;
    Ok(kernel_log_votes(train, h, |i| d[i][0]))
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", "bandwidth must be positive"));
    }
    Ok(())
}

/// `(ln N0, ln N1)` per horizon, where `N_c = Σ_{λ_g = c} π_g Σ_{Δ=0..Δmax}
/// exp(−‖x − μ_g advanced by Δ‖² / 2h²)` over the first `T` steps.
pub fn map_log_votes(model: &LatentTsModel, x: &TimeSeries, horizons: &[usize], h: f64) -> Result<Vec<(f64, f64)>> {
    check_bandwidth(h)?;
    let t_max = horizons.iter().copied().max().ok_or_else(|| invalid("horizon", "empty"))?;
    if horizons.contains(&0) {
        return Err(invalid("horizon", "must be positive"));
    }
    let xs = x.window(1, t_max as i64)?;
    let mut order: Vec<usize> = (0..horizons.len()).collect();
    order.sort_by_key(|&i| horizons[i]);
    // terms[label][horizon] collects ln π_g − ‖·‖²/2h² for every (g, Δ).
    let mut terms: [Vec<Vec<f64>>; 2] = [vec![Vec::new(); horizons.len()], vec![Vec::new(); horizons.len()]];
    for (g, src) in model.sources.iter().enumerate() {
        let ln_prior = model.priors[g].ln();
        let label = model.labels[g] as usize;
        for shift in 0..=model.max_shift as i64 {
            let mu = src.window(1 + shift, t_max as i64 + shift)?;
            let mut acc = 0.0;
            let mut next = 0;
            for (step, (a, b)) in xs.iter().zip(mu).enumerate() {
                acc += (a - b) * (a - b);
                while next < order.len() && horizons[order[next]] == step + 1 {
                    terms[label][order[next]].push(ln_prior - acc / (2.0 * h * h));
                    next += 1;
                }
            }
        }
    }
    Ok((0..horizons.len())
        .map(|j| {
            (
                log_sum_exp(terms[0][j].iter().copied()),
                log_sum_exp(terms[1][j].iter().copied()),
            )
        })
        .collect())
}

/// MAP decision with oracle knowledge of the sources, treating the noise as
/// Gaussian with scale `h`: 1 iff the label-1 likelihood mass is at least
/// the label-0 mass.
pub fn ts_oracle_map(model: &LatentTsModel, x: &TimeSeries, t: usize, h: f64) -> Result<u8> {
    let votes = map_log_votes(model, x, &[t], h)?[0];
    map_decision(votes)
}

fn map_decision((ln_n0, ln_n1): (f64, f64)) -> Result<u8> {
    if ln_n0 == f64::NEG_INFINITY && ln_n1 == f64::NEG_INFINITY {
        return Err(invalid("model", "both label likelihoods vanish"));
    }
    Ok((ln_n1 >= ln_n0) as u8)
}

/// Shifts of `a` and `b` by up to `Δmax` each that bring them closest over
/// steps `1..=T`, as a distance.
fn pair_separation(a: &TimeSeries, b: &TimeSeries, t: usize, max_shift: usize) -> Result<f64> {
    let dm = max_shift as i64;
    let t = t as i64;
    let wa = a.window(1 - dm, t + dm)?;
    let wb = b.window(1 - dm, t + dm)?;
    let span = 2 * max_shift + 1;
    let mut best = f64::INFINITY;
    for sa in 0..span {
        for sb in 0..span {
            let mut acc = 0.0;
            for step in 0..t as usize {
                let d = wa[sa + step] - wb[sb + step];
                acc += d * d;
                if acc >= best {
                    break;
                }
            }
            best = best.min(acc);
        }
    }
    Ok(best.sqrt())
}

/// Smallest shift-aligned distance between opposite-label training series
/// over the first `T` steps.
pub fn separation(train: &TsDataset, t: usize, max_shift: usize) -> Result<f64> {
    let ones: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 1).collect();
    let zeros: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 0).collect();
    if ones.is_empty() || zeros.is_empty() {
        return Err(Error::SingleLabel);
    }
    let mut best = f64::INFINITY;
    for &i in &ones {
        for &j in &zeros {
            best = best.min(pair_separation(&train.items[i], &train.items[j], t, max_shift)?);
        }
    }
    Ok(best)
}

/// The same quantity over the true sources instead of training samples.
pub fn center_separation(model: &LatentTsModel, t: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for g in 0..model.r() {
        for k in 0..model.r() {
            if model.labels[g] == 1 && model.labels[k] == 0 {
                best = best.min(pair_separation(&model.sources[g], &model.sources[k], t, model.max_shift)?);
            }
        }
    }
    Ok(best)
}

/// Settings of the desk-scale error-versus-horizon experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TsExperimentConfig {
    pub r: usize,
    /// Training size is `⌈β · r · ln r⌉`.
    pub beta: f64,
    pub sigma: f64,
    pub max_shift: usize,
    pub smooth_scale: f64,
    pub horizons: Vec<usize>,
    /// Kernel bandwidth; `None` means `2σ`.
    pub h: Option<f64>,
    pub tau: f64,
    pub n_test: usize,
    pub trials: usize,
}

impl TsExperimentConfig {
    /// Desk-scale version of the synthetic error-versus-horizon study:
    /// twenty sources, `β = 8`, unit noise, shifts up to 20 steps.
    pub fn desk_scale() -> Self {
        TsExperimentConfig {
            r: 20,
            beta: 8.0,
            sigma: 1.0,
            max_shift: 20,
            smooth_scale: 6.0,
            horizons: vec![1, 5, 10, 20, 40, 80, 150],
            h: None,
            tau: 1.0,
            n_test: 200,
            trials: 20,
        }
    }

    pub fn n_train(&self) -> usize {
        (self.beta * self.r as f64 * (self.r as f64).ln()).ceil() as usize
    }

    pub fn bandwidth(&self) -> f64 {
        self.h.unwrap_or(2.0 * self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsMethod {
    OneNn,
    Kernel,
    OracleMap,
}

impl TsMethod {
    pub fn name(self) -> &'static str {
        match self {
            TsMethod::OneNn => "one_nn",
            TsMethod::Kernel => "kernel",
            TsMethod::OracleMap => "oracle_map",
        }
    }

    pub const ALL: [TsMethod; 3] = [TsMethod::OneNn, TsMethod::Kernel, TsMethod::OracleMap];
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsTrialResult {
    pub trial: usize,
    /// `errors[m][j]`: misclassified test series for method `TsMethod::ALL[m]`
    /// at horizon `horizons[j]`.
    pub errors: [Vec<usize>; 3],
    pub n_test: usize,
}

impl TsTrialResult {
    pub fn error_rate(&self, method: TsMethod, horizon_index: usize) -> f64 {
        let m = TsMethod::ALL.iter().position(|&x| x == method).expect("listed");
        self.errors[m][horizon_index] as f64 / self.n_test as f64
    }
}

/// One trial: fresh sources, training set and test set from the stream
/// `(seed, "ts-experiment", trial)`. The oracle uses the true noise level.
pub fn run_ts_trial(cfg: &TsExperimentConfig, seed: u64, trial: usize) -> Result<TsTrialResult> {
    let t_max = *cfg.horizons.iter().max().ok_or_else(|| invalid("horizons", "empty"))?;
    let h = cfg.bandwidth();
    check_bandwidth(h)?;
    if cfg.n_test == 0 {
        return Err(invalid("n_test", "must be at least 1"));
    }
    let mut rng = derive_rng(seed, "ts-experiment", trial as u64);
    let model = gen_latent_sources(
        &TsModelConfig {
            r: cfg.r,
            t_max,
            smooth_scale: cfg.smooth_scale,
            sigma: cfg.sigma,
            max_shift: cfg.max_shift,
        },
        &mut rng,
    )?;
    let train = TsDataset::from_samples(gen_time_series(&model, cfg.n_train(), &mut rng)?, &mut rng)?;
    let test = gen_time_series(&model, cfg.n_test, &mut rng)?;
    let oracle_h = if cfg.sigma > 0.0 { cfg.sigma } else { h };
    let k = cfg.horizons.len();
    let mut errors = [vec![0; k], vec![0; k], vec![0; k]];
    for sample in &test {
        let d = ts_distances(&train, &sample.series, &cfg.horizons, cfg.max_shift)?;
        let map = map_log_votes(&model, &sample.series, &cfg.horizons, oracle_h)?;
        for j in 0..k {
            let nn = one_nn_label(&train, |i| d[i][j]);
            let kernel = vote_decision(kernel_log_votes(&train, h, |i| d[i][j]), cfg.tau);
            let oracle = map_decision(map[j])?;
            errors[0][j] += (nn != sample.label) as usize;
            errors[1][j] += (kernel != sample.label) as usize;
            errors[2][j] += (oracle != sample.label) as usize;
        }
    }
    Ok(TsTrialResult {
        trial,
        errors,
        n_test: cfg.n_test,
    })
}

pub fn run_ts_experiment(cfg: &TsExperimentConfig, seed: u64) -> Result<Vec<TsTrialResult>> {
    par::map_indexed(cfg.trials, |t| run_ts_trial(cfg, seed, t)).into_iter().collect()
}

/// Constants of the pointwise k-NN guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    /// Hölder constant of the regression function.
    pub c: f64,
    /// Hölder exponent in `(0, 1]`.
    pub alpha: f64,
    pub eps: f64,
    pub delta: f64,
    /// Density floor of the feature distribution.
    pub p_min: f64,
    /// Feature dimension.
    pub dim: usize,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(invalid("c", "must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid("alpha", "must lie in (0,1]"));
        }
        if !(self.eps > 0.0) {
            return Err(invalid("eps", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0,1)"));
        }
        if !(self.p_min > 0.0) || self.dim == 0 {
            return Err(invalid("p_min/dim", "must be positive"));
        }
        Ok(())
    }

    /// Critical radius `h* = (ε / 2C)^{1/α}`.
    pub fn h_star(&self) -> f64 {
        (self.eps / (2.0 * self.c)).powf(1.0 / self.alpha)
    }
}

/// The one-dimensional model behind the harness: `X ~ Uniform[0,1]`,
/// `Y ~ Bernoulli(η(X))` with `η(x) = 0.25 + C|x − ½|^α` clipped to `[0,1]`,
/// evaluated at the interior point `x = ½`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderBernoulli {
    pub c: f64,
    pub alpha: f64,
}

impl HolderBernoulli {
    pub const QUERY: f64 = 0.5;
    pub const LABEL_RANGE: f64 = 1.0;

    pub fn eta(&self, x: f64) -> f64 {
        (0.25 + self.c * (x - Self::QUERY).abs().powf(self.alpha)).clamp(0.0, 1.0)
    }

    /// `P(|X − ½| ≤ h)` under the uniform law.
    pub fn ball_mass(h: f64) -> f64 {
        (Self::QUERY + h).min(1.0) - (Self::QUERY - h).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnGuaranteePlan {
    pub n: usize,
    pub k: usize,
    pub h_star: f64,
    pub ball_mass: f64,
    /// `⌈2(y_max − y_min)²/ε² · ln(4/δ)⌉`.
    pub k_lower: usize,
    /// `⌊n · P(B)/2⌋`.
    pub k_upper: usize,
    pub n_lower: usize,
    /// Both the sample-size and the neighbor-count conditions hold.
    pub compliant: bool,
}

fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Chooses `n` and `k` as prescribed. Without overrides this is the
/// smallest `n` meeting both the sample-size condition and a nonempty
/// neighbor-count sandwich, with `k` at the sandwich's lower end. An
/// explicit `n` whose sandwich is empty is infeasible unless `k` is also
/// given, in which case the run is flagged as noncompliant.
pub fn plan_knn_guarantee(tp: &TheoryParams, n: Option<usize>, k: Option<usize>) -> Result<KnnGuaranteePlan> {
    tp.validate()?;
    let h_star = tp.h_star();
    let mass = HolderBernoulli::ball_mass(h_star);
    let k_lower = ceil_tolerant(2.0 * HolderBernoulli::LABEL_RANGE.powi(2) / (tp.eps * tp.eps) * (4.0 / tp.delta).ln());
    let k_lower = k_lower.max(1);
    let n_lower = ceil_tolerant(8.0 / mass * (2.0 / tp.delta).ln());
    let n = match n {
        Some(n) => n,
        None => n_lower.max(ceil_tolerant(2.0 * k_lower as f64 / mass)),
    };
    let k_upper = (n as f64 * mass / 2.0 + 1e-9).floor() as usize;
    let sandwich = k_lower <= k_upper;
    let k = match k {
        Some(k) => k,
        None if sandwich && n >= n_lower => k_lower,
        None => {
            return Err(Error::Infeasible(format!(
                "no k satisfies {k_lower} <= k <= {k_upper} with n = {n} (need n >= {n_lower})"
            )))
        }
    };
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    Ok(KnnGuaranteePlan {
        n,
        k,
        h_star,
        ball_mass: mass,
        k_lower,
        k_upper,
        n_lower,
        compliant: n >= n_lower && k_lower <= k && k <= k_upper,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnGuaranteeReport {
    pub plan: KnnGuaranteePlan,
    pub eta_at_query: f64,
    pub trials: usize,
    pub successes: usize,
    /// `|η̂ − η(½)|` per trial.
    pub errors: Vec<f64>,
}

impl KnnGuaranteeReport {
    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// One trial of k-NN regression at `x = ½` on a fresh sample.
pub fn knn_guarantee_trial(tp: &TheoryParams, plan: &KnnGuaranteePlan, seed: u64, trial: usize) -> Result<f64> {
    let model = HolderBernoulli { c: tp.c, alpha: tp.alpha };
    let mut rng = derive_rng(seed, "knn-guarantee", trial as u64);
    let xs: Vec<f64> = (0..plan.n).map(|_| rng.random::<f64>()).collect();
    let labels: Vec<f64> = xs.iter().map(|&x| (rng.random::<f64>() < model.eta(x)) as u8 as f64).collect();
    let points = xs.into_iter().map(|x| RealVector::new(vec![x])).collect::<Result<Vec<_>>>()?;
    let ds = LabeledDataset::new(points, Some(labels), &mut rng)?;
    let q = RealVector::new(vec![HolderBernoulli::QUERY])?;
    let est = knn_regress(&ds, &q, plan.k)?;
    Ok((est.value - model.eta(HolderBernoulli::QUERY)).abs())
}

pub fn knn_guarantee_harness(tp: &TheoryParams, plan: KnnGuaranteePlan, trials: usize, seed: u64) -> Result<KnnGuaranteeReport> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let errors = par::map_indexed(trials, |t| knn_guarantee_trial(tp, &plan, seed, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let successes = errors.iter().filter(|&&e| e <= tp.eps).count();
    Ok(KnnGuaranteeReport {
        plan,
        eta_at_query: HolderBernoulli { c: tp.c, alpha: tp.alpha }.eta(HolderBernoulli::QUERY),
        trials,
        successes,
        errors,
    })
}

/// Settings for relating empirical separation to accuracy across noise
/// levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationSweepConfig {
    pub r: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub horizon: usize,
    pub max_shift: usize,
    pub smooth_scale: f64,
    pub sigmas: Vec<f64>,
    /// Independent repetitions per noise level.
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationPoint {
    pub sigma: f64,
    pub repeat: usize,
    pub separation: f64,
    /// `S^(T) / σ`, the scale-free quantity in the error bound's exponent.
    pub normalized_separation: f64,
    /// Kernel classifier accuracy at bandwidth `2σ`.
    pub accuracy: f64,
}

pub fn separation_sweep(cfg: &SeparationSweepConfig, seed: u64) -> Result<Vec<SeparationPoint>> {
    let jobs: Vec<(usize, usize)> = (0..cfg.sigmas.len())
        .flat_map(|s| (0..cfg.repeats).map(move |r| (s, r)))
        .collect();
    par::map_slice(&jobs, |&(s, repeat)| {
        let sigma = cfg.sigmas[s];
        let mut rng = derive_rng(seed, "separation-sweep", (s * cfg.repeats + repeat) as u64);
        let model = gen_latent_sources(
            &TsModelConfig {
                r: cfg.r,
                t_max: cfg.horizon,
                smooth_scale: cfg.smooth_scale,
                sigma,
                max_shift: cfg.max_shift,
            },
            &mut rng,
        )?;
        let train = TsDataset::from_samples(gen_time_series(&model, cfg.n_train, &mut rng)?, &mut rng)?;
        let sep = separation(&train, cfg.horizon, cfg.max_shift)?;
        let test = gen_time_series(&model, cfg.n_test, &mut rng)?;
        let h = if sigma > 0.0 { 2.0 * sigma } else { 1.0 };
        let mut correct = 0;
        for sample in &test {
            correct += (ts_kernel_classify(&train, &sample.series, cfg.horizon, cfg.max_shift, h)? == sample.label) as usize;
        }
        Ok(SeparationPoint {
            sigma,
            repeat,
            separation: sep,
            normalized_separation: if sigma > 0.0 { sep / sigma } else { f64::INFINITY },
            accuracy: correct as f64 / cfg.n_test as f64,
        })
    })
    .into_iter()
    .collect()
}

/// Spearman correlation between normalized separation and accuracy over a
/// sweep. Raw separation between noisy samples grows with `σ`, so only the
/// ratio orders the noise levels by difficulty.
pub fn separation_accuracy_spearman(points: &[SeparationPoint]) -> Option<f64> {
    let s: Vec<f64> = points.iter().map(|p| p.normalized_separation).collect();
    let a: Vec<f64> = points.iter().map(|p| p.accuracy).collect();
    stats::spearman(&s, &a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn small_model(seed: u64, sigma: f64, max_shift: usize) -> LatentTsModel {
        gen_latent_sources(
            &TsModelConfig {
                r: 4,
                t_max: 12,
                smooth_scale: 2.0,
                sigma,
                max_shift,
            },
            &mut rng_from(seed),
        )
        .unwrap()
    }

    #[test]
    fn two_sources_cover_both_labels() {
        let cfg = TsModelConfig { r: 2, t_max: 5, smooth_scale: 0.0, sigma: 1.0, max_shift: 1 };
        let m = gen_latent_sources(&cfg, &mut rng_from(1)).unwrap();
        assert_eq!(m.labels(), &[0, 1]);
        assert_eq!(m.priors(), &[0.5, 0.5]);
        let cfg = TsModelConfig { r: 1, ..cfg };
        assert!(gen_latent_sources(&cfg, &mut rng_from(1)).is_err());
    }

    #[test]
    fn noiseless_unshifted_samples_copy_sources() {
        let m = small_model(2, 0.0, 0);
        for s in gen_time_series(&m, 20, &mut rng_from(3)).unwrap() {
            let src = m.sources()[s.cluster].window(1, 12).unwrap();
            assert_eq!(s.series.window(1, 12).unwrap(), src);
            assert_eq!(s.label, m.labels()[s.cluster]);
        }
    }

    #[test]
    fn one_nn_recovers_identical_series() {
        let m = small_model(4, 0.0, 0);
        let a = TimeSeries::new(1, m.sources()[0].window(1, 12).unwrap().to_vec()).unwrap();
        let b = TimeSeries::new(1, m.sources()[1].window(1, 12).unwrap().to_vec()).unwrap();
        let train = TsDataset::new(vec![a, b.clone()], vec![0, 1], &mut rng_from(1)).unwrap();
        assert_eq!(ts_1nn_classify(&train, &b, 12, 0).unwrap(), 1);
        assert_eq!(ts_kernel_classify(&train, &b, 12, 0, 1.0).unwrap(), 1);
    }

    #[test]
    fn kernel_vote_edge_cases() {
        let x = TimeSeries::new(1, vec![0.0; 4]).unwrap();
        let up = TimeSeries::new(1, vec![1.0; 4]).unwrap();
        let down = TimeSeries::new(1, vec![-1.0; 4]).unwrap();
        let ones = TsDataset::new(vec![up.clone(), down.clone()], vec![1, 1], &mut rng_from(1)).unwrap();
        assert_eq!(ts_kernel_classify(&ones, &x, 4, 0, 0.5).unwrap(), 1);
        let tie = TsDataset::new(vec![up, down], vec![0, 1], &mut rng_from(1)).unwrap();
        assert_eq!(ts_kernel_classify(&tie, &x, 4, 0, 0.5).unwrap(), 1);
        // A heavy enough bias toward 0 flips the tie.
        assert_eq!(ts_kernel_classify_biased(&tie, &x, 4, 0, 0.5, 1.5).unwrap(), 0);
    }

    #[test]
    fn kernel_votes_match_direct_sums() {
        let m = small_model(5, 1.0, 2);
        let mut rng = rng_from(6);
        let train = TsDataset::from_samples(gen_time_series(&m, 9, &mut rng).unwrap(), &mut rng).unwrap();
        let x = &gen_time_series(&m, 1, &mut rng).unwrap()[0].series;
        let h = 3.0;
        let (ln_v0, ln_v1) = ts_kernel_log_votes(&train, x, 10, 2, h).unwrap();
        let (mut v0, mut v1) = (0.0, 0.0);
        for (item, &label) in train.items().iter().zip(train.labels()) {
            let d = crate::series::shift_min_distance(x, item, 10, 2).unwrap();
            let w = (-d * d / (2.0 * h * h)).exp();
            if label == 1 {
                v1 += w;
            } else {
                v0 += w;
            }
        }
        assert!((ln_v0.exp() - v0).abs() <= 1e-12 * v0.max(1e-300));
        assert!((ln_v1.exp() - v1).abs() <= 1e-12 * v1.max(1e-300));
    }

    #[test]
    fn map_threshold_for_symmetric_constant_sources() {
        let mu = 2.0;
        let sources = vec![TimeSeries::new(1, vec![-mu; 3]).unwrap(), TimeSeries::new(1, vec![mu; 3]).unwrap()];
        let m = LatentTsModel::new(sources, vec![0, 1], vec![0.5, 0.5], 1.0, 0, 3).unwrap();
        let series = |v: [f64; 3]| TimeSeries::new(1, v.to_vec()).unwrap();
        assert_eq!(ts_oracle_map(&m, &series([0.1, -0.05, 0.0]), 3, 1.0).unwrap(), 1);
        assert_eq!(ts_oracle_map(&m, &series([-0.1, 0.05, 0.0]), 3, 1.0).unwrap(), 0);
        assert_eq!(ts_oracle_map(&m, &series([0.3, -0.3, 0.0]), 3, 1.0).unwrap(), 1);
    }

    #[test]
    fn map_recovers_noiseless_source() {
        let m = small_model(7, 0.0, 2);
        for g in 0..m.r() {
            let x = TimeSeries::new(1, m.sources()[g].window(1, 12).unwrap().to_vec()).unwrap();
            assert_eq!(ts_oracle_map(&m, &x, 12, 0.5).unwrap(), m.labels()[g]);
        }
    }

    #[test]
    fn map_votes_match_term_enumeration() {
        let m = gen_latent_sources(
            &TsModelConfig { r: 3, t_max: 4, smooth_scale: 1.0, sigma: 1.0, max_shift: 2 },
            &mut rng_from(8),
        )
        .unwrap();
        let x = &gen_time_series(&m, 1, &mut rng_from(9)).unwrap()[0].series;
        let h = 4.0;
        let votes = map_log_votes(&m, x, &[4], h).unwrap()[0];
        let mut mass = [0.0, 0.0];
        for g in 0..3 {
            for shift in 0..=2i64 {
                let mut s = 0.0;
                for t in 1..=4 {
                    let d = x.get(t).unwrap() - m.sources()[g].get(t + shift).unwrap();
                    s += d * d;
                }
                mass[m.labels()[g] as usize] += m.priors()[g] * (-s / (2.0 * h * h)).exp();
            }
        }
        assert!((votes.0.exp() - mass[0]).abs() <= 1e-12 * mass[0]);
        assert!((votes.1.exp() - mass[1]).abs() <= 1e-12 * mass[1]);
    }

    #[test]
    fn separation_examples() {
        let m = small_model(10, 1.0, 1);
        let mut rng = rng_from(11);
        let samples = gen_time_series(&m, 8, &mut rng).unwrap();
        let train = TsDataset::from_samples(samples.clone(), &mut rng).unwrap();
        let twin = TsDataset::new(
            vec![samples[0].series.clone(), samples[0].series.clone()],
            vec![0, 1],
            &mut rng,
        )
        .unwrap();
        assert_eq!(separation(&twin, 10, 1).unwrap(), 0.0);
        assert!(matches!(
            separation(&TsDataset::new(vec![samples[0].series.clone()], vec![1], &mut rng).unwrap(), 5, 1),
            Err(Error::SingleLabel)
        ));
        if train.labels().contains(&0) && train.labels().contains(&1) {
            let mut prev = 0.0;
            for t in 1..=11 {
                let s = separation(&train, t, 1).unwrap();
                assert!(s >= prev);
                prev = s;
            }
        }
    }

    #[test]
    fn knn_guarantee_plan_matches_prescription() {
        let tp = TheoryParams { c: 1.0, alpha: 1.0, eps: 0.2, delta: 0.1, p_min: 1.0, dim: 1 };
        let plan = plan_knn_guarantee(&tp, None, None).unwrap();
        assert!((plan.h_star - 0.1).abs() < 1e-15);
        assert!((plan.ball_mass - 0.2).abs() < 1e-12);
        assert_eq!(plan.k_lower, 185);
        assert_eq!(plan.n, 1850);
        assert_eq!(plan.k, 185);
        assert!(plan.compliant);
        assert!(matches!(plan_knn_guarantee(&tp, Some(100), None), Err(Error::Infeasible(_))));
        let forced = plan_knn_guarantee(&tp, Some(1850), Some(1850)).unwrap();
        assert!(!forced.compliant);
    }

    #[test]
    fn knn_guarantee_huge_tolerance_always_succeeds() {
        let tp = TheoryParams { c: 1.0, alpha: 1.0, eps: 1.0, delta: 0.1, p_min: 1.0, dim: 1 };
        let plan = plan_knn_guarantee(&tp, None, None).unwrap();
        let report = knn_guarantee_harness(&tp, plan, 50, 3).unwrap();
        assert_eq!(report.success_fraction(), 1.0);
    }
}
