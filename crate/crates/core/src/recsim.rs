//! Online collaborative filtering under the latent source model: model
//! generation, Collaborative-Greedy with either cosine distance, baseline
//! policies and reward accounting.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::ratings::RatingsVector;
use crate::seed::{derive_rng, Rng};

/// Item preference probabilities per user cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCfModel {
    mu: Vec<Vec<f64>>,
    sigma: f64,
}

impl LatentCfModel {
    /// Every `μ_gi` must lie in `[0,1]` with `min(μ_gi, 1 − μ_gi) ≤ σ`.
    pub fn new(mu: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if mu.is_empty() {
            return Err(invalid("r", "need at least one cluster"));
        }
        let m = mu[0].len();
        if m == 0 || mu.iter().any(|row| row.len() != m) {
            return Err(invalid("mu", "rows must be nonempty and of equal length"));
        }
        if !(0.0..0.5).contains(&sigma) {
            return Err(invalid("sigma", "must lie in [0, 1/2)"));
        }
        for &p in mu.iter().flatten() {
            if !(0.0..=1.0).contains(&p) || p.min(1.0 - p) > sigma + 1e-12 {
                return Err(invalid("mu", format!("{p} violates the noise bound {sigma}")));
            }
        }
        Ok(LatentCfModel { mu, sigma })
    }

    pub fn r(&self) -> usize {
        self.mu.len()
    }

    pub fn m(&self) -> usize {
        self.mu[0].len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu(&self, cluster: usize) -> &[f64] {
        &self.mu[cluster]
    }

    pub fn is_likable(&self, cluster: usize, item: usize) -> bool {
        self.mu[cluster][item] > 0.5
    }

    pub fn likable_count(&self, cluster: usize) -> usize {
        self.mu[cluster].iter().filter(|&&p| p > 0.5).count()
    }

    /// Smallest fraction of likable items over clusters.
    pub fn zeta(&self) -> f64 {
        (0..self.r()).map(|g| self.likable_count(g)).min().unwrap_or(0) as f64 / self.m() as f64
    }

    /// `1 − ⟨2μ_g − 1, 2μ_h − 1⟩ / m`.
    pub fn expected_cosine_distance(&self, g: usize, h: usize) -> f64 {
        let inner: f64 = self.mu[g].iter().zip(&self.mu[h]).map(|(a, b)| (2.0 * a - 1.0) * (2.0 * b - 1.0)).sum();
        1.0 - inner / self.m() as f64
    }

    /// Largest `S*` for which the cosine separation condition holds.
    pub fn measured_separation(&self) -> Result<f64> {
        if self.r() < 2 {
            return Err(invalid("r", "need at least two clusters"));
        }
        let scale = (1.0 - 2.0 * self.sigma).powi(2);
        let mut best = f64::INFINITY;
        for g in 0..self.r() {
            for h in g + 1..self.r() {
                best = best.min(1.0 - (1.0 - self.expected_cosine_distance(g, h)) / scale);
            }
        }
        Ok(best)
    }

    /// Uniform cluster assignment for `n` users.
    pub fn assign_users(&self, n: usize, rng: &mut Rng) -> Vec<usize> {
        (0..n).map(|_| rng.random_range(0..self.r())).collect()
    }
}

/// Each `μ_gi` is `1 − σ` with probability `ζ` and `σ` otherwise.
pub fn gen_cf_model(r: usize, m: usize, sigma: f64, zeta: f64, rng: &mut Rng) -> Result<LatentCfModel> {
    if r == 0 || m == 0 {
        return Err(invalid("r/m", "must be positive"));
    }
    if !(0.0..0.5).contains(&sigma) {
        return Err(invalid("sigma", "must lie in [0, 1/2)"));
    }
    if !(zeta > 0.0 && zeta <= 0.5) {
        return Err(invalid("zeta", "must lie in (0, 1/2]"));
    }
    let mu = (0..r)
        .map(|_| (0..m).map(|_| if rng.random::<f64>() < zeta { 1.0 - sigma } else { sigma }).collect())
        .collect();
    LatentCfModel::new(mu, sigma)
}

/// Whether every distinct cluster pair meets
/// `1 − ⟨2μ_g − 1, 2μ_h − 1⟩/m ≥ 4(σ(1 − σ) + S*(½ − σ)²)`.
pub fn cosine_sep_check(model: &LatentCfModel, s_star: f64) -> Result<bool> {
    if model.r() < 2 {
        return Err(invalid("r", "need at least two clusters"));
    }
    let s = model.sigma;
    let threshold = 4.0 * (s * (1.0 - s) + s_star * (0.5 - s) * (0.5 - s));
    for g in 0..model.r() {
        for h in g + 1..model.r() {
            if model.expected_cosine_distance(g, h) < threshold {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The neighborhood radius `1 − 2(½ − σ)² S*` used with the separation
/// guarantee.
pub fn cg_bandwidth(sigma: f64, s_star: f64) -> f64 {
    1.0 - 2.0 * (0.5 - sigma).powi(2) * s_star
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceVariant {
    /// Over all items both users rated.
    Cosine,
    /// Over the jointly explored items only.
    JointCosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    CollaborativeGreedy { h: f64, alpha: f64, distance: DistanceVariant },
    RandomOnly,
    PopularityAmongNeighbors { h: f64 },
    Oracle,
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        let check_h = |h: f64| {
            if (0.0..=2.0).contains(&h) {
                Ok(())
            } else {
                Err(invalid("h", "must lie in [0, 2]"))
            }
        };
        match *self {
            Policy::CollaborativeGreedy { h, alpha, .. } => {
                check_h(h)?;
                if !(alpha > 0.0 && alpha <= 4.0 / 7.0) {
                    return Err(invalid("alpha", "must lie in (0, 4/7]"));
                }
                Ok(())
            }
            Policy::PopularityAmongNeighbors { h } => check_h(h),
            Policy::RandomOnly | Policy::Oracle => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::CollaborativeGreedy { distance: DistanceVariant::Cosine, .. } => "collaborative_greedy_cosine",
            Policy::CollaborativeGreedy { .. } => "collaborative_greedy",
            Policy::RandomOnly => "random_only",
            Policy::PopularityAmongNeighbors { .. } => "popularity_among_neighbors",
            Policy::Oracle => "oracle",
        }
    }
}

/// `(ε_J(t), ε_R(n))` after clipping so they sum to at most 1, joint first.
pub fn exploration_probs(t: usize, n: usize, alpha: f64) -> (f64, f64) {
    let joint = (1.0 / (t as f64).powf(alpha)).min(1.0);
    let random = (1.0 / (n as f64).powf(alpha)).min(1.0 - joint);
    (joint, random)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    RandomExploration,
    JointExploration,
    Exploitation,
}

/// Revealed ratings and the bookkeeping needed to score items quickly.
#[derive(Debug, Clone)]
pub struct SimState {
    ratings: Vec<RatingsVector>,
    consumed: Vec<Vec<(usize, i8)>>,
    xi: Vec<usize>,
    joint_steps: usize,
    t: usize,
    // Pairwise inner products and common-support sizes, row-major n×n.
    dot: Vec<i32>,
    common: Vec<u32>,
    joint_dot: Vec<i32>,
}

impl SimState {
    pub fn new(n: usize, m: usize, rng: &mut Rng) -> Self {
        let mut xi: Vec<usize> = (0..m).collect();
        xi.shuffle(rng);
        SimState {
            ratings: vec![RatingsVector::unrated(m); n],
            consumed: vec![Vec::new(); n],
            xi,
            joint_steps: 0,
            t: 0,
            dot: vec![0; n * n],
            common: vec![0; n * n],
            joint_dot: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.ratings.len()
    }

    pub fn m(&self) -> usize {
        self.xi.len()
    }

    /// Completed time steps.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn ratings(&self, user: usize) -> &RatingsVector {
        &self.ratings[user]
    }

    /// Items consumed by `user` with their revealed ratings, in order.
    pub fn consumed(&self, user: usize) -> &[(usize, i8)] {
        &self.consumed[user]
    }

    pub fn item_order(&self) -> &[usize] {
        &self.xi
    }

    pub fn joint_steps(&self) -> usize {
        self.joint_steps
    }

    /// The first `t_J` items of the shared order, all rated by every user.
    pub fn jointly_explored(&self) -> &[usize] {
        &self.xi[..self.joint_steps]
    }

    /// Distance between two users, or `None` when their support is empty.
    pub fn distance(&self, u: usize, v: usize, variant: DistanceVariant) -> Option<f64> {
        let k = u * self.n() + v;
        match variant {
            DistanceVariant::Cosine => {
                (self.common[k] > 0).then(|| 1.0 - self.dot[k] as f64 / self.common[k] as f64)
            }
            DistanceVariant::JointCosine => {
                (self.joint_steps > 0).then(|| 1.0 - self.joint_dot[k] as f64 / self.joint_steps as f64)
            }
        }
    }

    fn reveal(&mut self, user: usize, item: usize, rating: i8) {
        assert!(!self.ratings[user].is_rated(item), "item {item} recommended twice to user {user}");
        let n = self.n();
        for v in 0..n {
            let other = self.ratings[v].get(item);
            if v != user && other != 0 {
                let prod = (rating * other) as i32;
                self.dot[user * n + v] += prod;
                self.dot[v * n + user] += prod;
                self.common[user * n + v] += 1;
                self.common[v * n + user] += 1;
            }
        }
        self.ratings[user].set(item, rating);
        self.consumed[user].push((item, rating));
    }

    fn extend_joint(&mut self) {
        let item = self.xi[self.joint_steps];
        self.joint_steps += 1;
        let n = self.n();
        for u in 0..n {
            let a = self.ratings[u].get(item) as i32;
            for v in 0..n {
                self.joint_dot[u * n + v] += a * self.ratings[v].get(item) as i32;
            }
        }
    }

    fn neighbors(&self, u: usize, h: f64, variant: DistanceVariant) -> Vec<usize> {
        (0..self.n())
            .filter(|&v| v != u && self.distance(u, v, variant).is_some_and(|d| d <= h))
            .collect()
    }

    /// `(likes, ratings)` per item among `u`'s neighbors.
    fn neighbor_counts(&self, u: usize, h: f64, variant: DistanceVariant) -> (Vec<u32>, Vec<u32>) {
        let mut likes = vec![0; self.m()];
        let mut rated = vec![0; self.m()];
        for v in self.neighbors(u, h, variant) {
            for &(item, rating) in &self.consumed[v] {
                rated[item] += 1;
                likes[item] += (rating > 0) as u32;
            }
        }
        (likes, rated)
    }

    /// `p̂_ui` for every item at once.
    pub fn scores(&self, u: usize, h: f64, variant: DistanceVariant) -> Vec<f64> {
        let (likes, rated) = self.neighbor_counts(u, h, variant);
        likes
            .iter()
            .zip(&rated)
            .map(|(&l, &r)| if r > 0 { l as f64 / r as f64 } else { 0.5 })
            .collect()
    }

    fn first_unrated_in_order(&self, user: usize) -> Option<usize> {
        self.xi.iter().copied().find(|&i| !self.ratings[user].is_rated(i))
    }

    fn random_unrated(&self, user: usize, rng: &mut Rng) -> Option<usize> {
        let left = self.m() - self.consumed[user].len();
        if left == 0 {
            return None;
        }
        let mut pick = rng.random_range(0..left);
        (0..self.m()).find(|&i| {
            if self.ratings[user].is_rated(i) {
                return false;
            }
            if pick == 0 {
                return true;
            }
            pick -= 1;
            false
        })
    }

    /// Unconsumed item maximizing `key`, ties broken uniformly at random.
    fn argmax_unrated(&self, user: usize, key: impl Fn(usize) -> f64, rng: &mut Rng) -> Option<usize> {
        let mut best = None;
        let mut best_key = f64::NEG_INFINITY;
        let mut ties = 0u32;
        for i in (0..self.m()).filter(|&i| !self.ratings[user].is_rated(i)) {
            let k = key(i);
            if best.is_none() || k > best_key {
                best = Some(i);
                best_key = k;
                ties = 1;
            } else if k == best_key {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    best = Some(i);
                }
            }
        }
        best
    }
}

/// `p̂_ui` computed directly from the revealed ratings: the liked fraction
/// among neighbors of `u` (distance at most `h`) who rated `i`, or ½ when
/// none did.
pub fn score_pui(state: &SimState, u: usize, i: usize, h: f64, variant: DistanceVariant) -> f64 {
    let mut likes = 0u32;
    let mut rated = 0u32;
    for v in state.neighbors(u, h, variant) {
        let y = state.ratings[v].get(i);
        if y != 0 {
            rated += 1;
            likes += (y > 0) as u32;
        }
    }
    if rated > 0 {
        likes as f64 / rated as f64
    } else {
        0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recommendation {
    /// 1-based time step.
    pub t: usize,
    pub user: usize,
    pub item: usize,
    pub rating: i8,
    pub likable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub kind: StepKind,
    pub eps_joint: f64,
    pub eps_random: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub clusters: Vec<usize>,
    /// Likable recommendations made in steps `1..=t`, at index `t − 1`.
    pub cumulative_likable: Vec<u64>,
    pub steps: Vec<StepRecord>,
    pub log: Vec<Recommendation>,
    pub state: SimState,
}

impl SimOutcome {
    /// Average cumulative likable count per user after each step.
    pub fn per_user_average(&self) -> Vec<f64> {
        let n = self.clusters.len() as f64;
        self.cumulative_likable.iter().map(|&c| c as f64 / n).collect()
    }

    /// Fraction of all recommendations up to each step that were likable.
    pub fn likable_fraction(&self) -> Vec<f64> {
        let n = self.clusters.len() as f64;
        self.cumulative_likable
            .iter()
            .enumerate()
            .map(|(t, &c)| c as f64 / (n * (t + 1) as f64))
            .collect()
    }
}

/// One time step: picks an action for every user and reveals the ratings.
pub fn collaborative_greedy_step(
    state: &mut SimState,
    model: &LatentCfModel,
    clusters: &[usize],
    policy: &Policy,
    rng: &mut Rng,
) -> Result<(StepRecord, Vec<Recommendation>)> {
    let n = state.n();
    let t = state.t + 1;
    if t > state.m() {
        return Err(Error::Exhausted { user: 0 });
    }
    let (kind, eps_joint, eps_random) = match *policy {
        Policy::CollaborativeGreedy { alpha, .. } => {
            let (pj, pr) = exploration_probs(t, n, alpha);
            let u: f64 = rng.random();
            let kind = if u < pj {
                StepKind::JointExploration
            } else if u < pj + pr {
                StepKind::RandomExploration
            } else {
                StepKind::Exploitation
            };
            (kind, pj, pr)
        }
        Policy::RandomOnly => (StepKind::RandomExploration, 0.0, 1.0),
        Policy::PopularityAmongNeighbors { .. } | Policy::Oracle => (StepKind::Exploitation, 0.0, 0.0),
    };
    let mut picks = Vec::with_capacity(n);
    for (user, &cluster) in clusters.iter().enumerate().take(n) {
        let item = match (kind, policy) {
            (StepKind::JointExploration, _) => state.first_unrated_in_order(user),
            (StepKind::RandomExploration, _) => state.random_unrated(user, rng),
            (_, Policy::CollaborativeGreedy { h, distance, .. }) => {
                let scores = state.scores(user, *h, *distance);
                state.argmax_unrated(user, |i| scores[i], rng)
            }
            (_, Policy::PopularityAmongNeighbors { h }) => {
                let (likes, _) = state.neighbor_counts(user, *h, DistanceVariant::Cosine);
                state.argmax_unrated(user, |i| likes[i] as f64, rng)
            }
            (_, Policy::Oracle) => {
                let mu = model.mu(cluster);
                state.argmax_unrated(user, |i| mu[i], rng)
            }
            (_, Policy::RandomOnly) => state.random_unrated(user, rng),
        };
        picks.push(item.ok_or(Error::Exhausted { user })?);
    }
    // All choices use the ratings revealed before this step.
    let mut recs = Vec::with_capacity(n);
    for (user, item) in picks.into_iter().enumerate() {
        let g = clusters[user];
        let rating = if rng.random::<f64>() < model.mu(g)[item] { 1 } else { -1 };
        state.reveal(user, item, rating);
        recs.push(Recommendation {
            t,
            user,
            item,
            rating,
            likable: model.is_likable(g, item),
        });
    }
    if kind == StepKind::JointExploration {
        state.extend_joint();
    }
    state.t = t;
    Ok((
        StepRecord {
            t,
            kind,
            eps_joint,
            eps_random,
        },
        recs,
    ))
}

/// Runs `horizon` steps for `n_users` freshly assigned users.
pub fn simulate(model: &LatentCfModel, n_users: usize, horizon: usize, policy: &Policy, rng: &mut Rng) -> Result<SimOutcome> {
    policy.validate()?;
    if n_users == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if horizon > model.m() {
        return Err(invalid("T", format!("{horizon} exceeds the number of items {}", model.m())));
    }
    let clusters = model.assign_users(n_users, rng);
    let mut state = SimState::new(n_users, model.m(), rng);
    let mut cumulative_likable = Vec::with_capacity(horizon);
    let mut steps = Vec::with_capacity(horizon);
    let mut log = Vec::with_capacity(horizon * n_users);
    let mut total = 0u64;
    for _ in 0..horizon {
        let (step, recs) = collaborative_greedy_step(&mut state, model, &clusters, policy, rng)?;
        total += recs.iter().filter(|r| r.likable).count() as u64;
        cumulative_likable.push(total);
        steps.push(step);
        log.extend(recs);
    }
    Ok(SimOutcome {
        clusters,
        cumulative_likable,
        steps,
        log,
        state,
    })
}

/// Revealed ratings as `(user, item, rating)` triples, users then items.
pub fn ratings_triples(state: &SimState) -> Vec<(usize, usize, i8)> {
    (0..state.n())
        .flat_map(|u| {
            state.ratings[u]
                .as_slice()
                .iter()
                .enumerate()
                .filter(|(_, &y)| y != 0)
                .map(move |(i, &y)| (u, i, y))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfExperimentConfig {
    pub r: usize,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    pub zeta: f64,
    pub horizon: usize,
    pub seeds: usize,
}

impl CfExperimentConfig {
    /// Model size used for the dominance check against random exploration.
    pub fn desk_scale() -> Self {
        CfExperimentConfig {
            r: 4,
            m: 500,
            n: 200,
            sigma: 0.125,
            zeta: 0.25,
            horizon: 125,
            seeds: 10,
        }
    }
}

/// Picks `h` from the model's own separation when `h` is `None`.
pub type PolicyFactory<'a> = dyn Fn(&LatentCfModel) -> Result<Policy> + Sync + 'a;

/// Collaborative-Greedy with `h = 1 − 2(½ − σ)² S*` from the measured
/// separation unless `h` is given.
pub fn collaborative_greedy_for(model: &LatentCfModel, h: Option<f64>, alpha: f64, distance: DistanceVariant) -> Result<Policy> {
    let h = match h {
        Some(h) => h,
        None => cg_bandwidth(model.sigma(), model.measured_separation()?.clamp(0.0, 1.0)),
    };
    Ok(Policy::CollaborativeGreedy { h, alpha, distance })
}

/// One run per seed index. Run `s` draws its model from
/// `(seed, "cf-model", s)` and its simulation from `(seed, "cf-sim", s)`,
/// so different policies face the same models.
pub fn run_cf_experiment(cfg: &CfExperimentConfig, policy: &PolicyFactory<'_>, seed: u64) -> Result<Vec<SimOutcome>> {
    par::map_indexed(cfg.seeds, |s| {
        let model = gen_cf_model(cfg.r, cfg.m, cfg.sigma, cfg.zeta, &mut derive_rng(seed, "cf-model", s as u64))?;
        let policy = policy(&model)?;
        simulate(&model, cfg.n, cfg.horizon, &policy, &mut derive_rng(seed, "cf-sim", s as u64))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::cosine_dist_ratings;
    use crate::seed::rng_from;

    #[test]
    fn exploration_schedule_examples() {
        let (pj, pr) = exploration_probs(1, 16, 0.5);
        assert_eq!((pj, pr), (1.0, 0.0));
        let (pj, pr) = exploration_probs(100, 16, 0.5);
        assert!((pj - 0.1).abs() < 1e-15);
        assert_eq!(pr, 0.25);
    }

    #[test]
    fn noiseless_model_is_deterministic() {
        let model = gen_cf_model(3, 20, 0.0, 0.4, &mut rng_from(1)).unwrap();
        assert!(model.mu(0).iter().all(|&p| p == 0.0 || p == 1.0));
        let out = simulate(&model, 5, 20, &Policy::RandomOnly, &mut rng_from(2)).unwrap();
        for r in &out.log {
            assert_eq!(r.rating > 0, r.likable);
        }
    }

    #[test]
    fn model_rejects_noise_violations() {
        assert!(LatentCfModel::new(vec![vec![0.3, 0.9]], 0.1).is_err());
        assert!(LatentCfModel::new(vec![vec![0.1, 0.9]], 0.1).is_ok());
        assert!(gen_cf_model(2, 10, 0.5, 0.2, &mut rng_from(1)).is_err());
    }

    #[test]
    fn score_examples() {
        let mut state = SimState::new(4, 5, &mut rng_from(1));
        // Everyone agrees on item 0, then users 1..3 rate item 1 as (+, +, −).
        for u in 0..4 {
            state.reveal(u, 0, 1);
        }
        state.reveal(1, 1, 1);
        state.reveal(2, 1, 1);
        state.reveal(3, 1, -1);
        assert_eq!(score_pui(&state, 0, 1, 0.5, DistanceVariant::Cosine), 2.0 / 3.0);
        assert_eq!(score_pui(&state, 0, 4, 0.5, DistanceVariant::Cosine), 0.5);
        // No jointly explored items yet, so nobody is a neighbor.
        assert_eq!(score_pui(&state, 0, 1, 2.0, DistanceVariant::JointCosine), 0.5);
        // User 3 disagrees with user 1 on item 1, so only users 0 and 2 count.
        assert_eq!(score_pui(&state, 1, 1, 0.5, DistanceVariant::Cosine), 1.0);
        state.reveal(0, 3, 1);
        state.reveal(2, 3, 1);
        assert_eq!(score_pui(&state, 1, 3, 0.5, DistanceVariant::Cosine), 1.0);
    }

    #[test]
    fn cached_distances_match_direct_computation() {
        let model = gen_cf_model(3, 40, 0.2, 0.3, &mut rng_from(3)).unwrap();
        let policy = Policy::CollaborativeGreedy { h: 0.9, alpha: 0.5, distance: DistanceVariant::Cosine };
        let out = simulate(&model, 12, 30, &policy, &mut rng_from(4)).unwrap();
        let st = &out.state;
        for u in 0..12 {
            for v in 0..12 {
                if u == v {
                    continue;
                }
                let common: Vec<usize> =
                    (0..40).filter(|&i| st.ratings(u).is_rated(i) && st.ratings(v).is_rated(i)).collect();
                let direct = cosine_dist_ratings(st.ratings(u), st.ratings(v), &common).ok();
                assert_eq!(st.distance(u, v, DistanceVariant::Cosine), direct);
                let joint = cosine_dist_ratings(st.ratings(u), st.ratings(v), st.jointly_explored()).ok();
                assert_eq!(st.distance(u, v, DistanceVariant::JointCosine), joint);
            }
            let fast = st.scores(u, 0.9, DistanceVariant::Cosine);
            for (i, &f) in fast.iter().enumerate() {
                assert_eq!(f, score_pui(st, u, i, 0.9, DistanceVariant::Cosine));
            }
        }
    }

    #[test]
    fn first_step_is_joint_and_joint_prefix_is_rated() {
        let model = gen_cf_model(2, 30, 0.1, 0.3, &mut rng_from(5)).unwrap();
        let policy = Policy::CollaborativeGreedy { h: 0.8, alpha: 0.5, distance: DistanceVariant::JointCosine };
        let out = simulate(&model, 8, 30, &policy, &mut rng_from(6)).unwrap();
        assert_eq!(out.steps[0].kind, StepKind::JointExploration);
        let joint = out.steps.iter().filter(|s| s.kind == StepKind::JointExploration).count();
        assert_eq!(out.state.joint_steps(), joint);
        for u in 0..8 {
            assert!(out.state.jointly_explored().iter().all(|&i| out.state.ratings(u).is_rated(i)));
        }
    }

    #[test]
    fn horizon_limits() {
        let model = gen_cf_model(2, 10, 0.1, 0.3, &mut rng_from(7)).unwrap();
        let out = simulate(&model, 3, 0, &Policy::RandomOnly, &mut rng_from(1)).unwrap();
        assert!(out.cumulative_likable.is_empty());
        assert!(simulate(&model, 3, 11, &Policy::RandomOnly, &mut rng_from(1)).is_err());
        let out = simulate(&model, 3, 10, &Policy::Oracle, &mut rng_from(1)).unwrap();
        assert_eq!(out.state.consumed(0).len(), 10);
    }

    #[test]
    fn separation_examples() {
        let same = LatentCfModel::new(vec![vec![0.9, 0.1, 0.9], vec![0.9, 0.1, 0.9]], 0.1).unwrap();
        assert!((same.expected_cosine_distance(0, 1) - (1.0 - 0.8 * 0.8)).abs() < 1e-12);
        assert!(!cosine_sep_check(&same, 1e-6).unwrap());
        let orth = LatentCfModel::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]], 0.0).unwrap();
        assert!(cosine_sep_check(&orth, 1.0).unwrap());
        assert!(!cosine_sep_check(&orth, 1.0 + 1e-9).unwrap());
        assert_eq!(orth.measured_separation().unwrap(), 1.0);
        let single = LatentCfModel::new(vec![vec![1.0]], 0.0).unwrap();
        assert!(cosine_sep_check(&single, 0.5).is_err());
    }
}
