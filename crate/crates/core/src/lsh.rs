//! Locality-sensitive hashing for Hamming space: bit sampling, `d' × L`
//! amplification, bucket tables and the near-to-nearest radius ladder.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::seed::{mix64, Rng};
use crate::space::{BitVector, LabeledDataset, NeighborHit, Point};

/// A `(c, R, P1, P2)`-sensitive family description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshFamilyParams {
    pub c: f64,
    pub radius: f64,
    pub p1: f64,
    pub p2: f64,
}

impl LshFamilyParams {
    pub fn new(c: f64, radius: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(c > 1.0) {
            return Err(invalid("c", "approximation factor must exceed 1"));
        }
        if !(radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        check_probabilities(p1, p2)?;
        Ok(LshFamilyParams { c, radius, p1, p2 })
    }

    /// Bit sampling on `{0,1}^d`: `P1 = 1 − R/d`, `P2 = 1 − cR/d`.
    pub fn hamming(d: usize, radius: f64, c: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        let d = d as f64;
        Self::new(c, radius, 1.0 - radius / d, 1.0 - c * radius / d)
    }
}

fn check_probabilities(p1: f64, p2: f64) -> Result<()> {
    if !(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0) {
        return Err(invalid("p1/p2", format!("collision probabilities must lie in (0,1), got {p1}, {p2}")));
    }
    if p1 <= p2 {
        return Err(Error::DegenerateFamily { p1, p2 });
    }
    Ok(())
}

/// One atomic hash `x ↦ x_i` for a fixed coordinate `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitHash {
    coord: usize,
}

impl BitHash {
    pub fn coord(&self) -> usize {
        self.coord
    }

    #[inline]
    pub fn apply(&self, x: &BitVector) -> bool {
        x.get(self.coord)
    }
}

pub fn sample_bit_hash(d: usize, rng: &mut Rng) -> Result<BitHash> {
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    Ok(BitHash {
        coord: rng.random_range(0..d),
    })
}

/// Monte Carlo fraction of freshly drawn atomic hashes on which `x1` and
/// `x2` collide.
pub fn collision_prob_estimate(x1: &BitVector, x2: &BitVector, trials: usize, rng: &mut Rng) -> Result<f64> {
    crate::space::hamming(x1, x2)?;
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let mut hits = 0usize;
    for _ in 0..trials {
        let h = sample_bit_hash(x1.dim(), rng)?;
        hits += (h.apply(x1) == h.apply(x2)) as usize;
    }
    Ok(hits as f64 / trials as f64)
}

/// Monte Carlo fraction of freshly drawn `rows`-wide columns on which `x1`
/// and `x2` get the same bucket key.
pub fn column_collision_estimate(
    x1: &BitVector,
    x2: &BitVector,
    rows: usize,
    trials: usize,
    rng: &mut Rng,
) -> Result<f64> {
    crate::space::hamming(x1, x2)?;
    if trials == 0 || rows == 0 {
        return Err(invalid("trials/rows", "must be at least 1"));
    }
    let mut hits = 0usize;
    for _ in 0..trials {
        let g = AmplifiedHasher::sample(x1.dim(), rows, 1, rng)?;
        hits += (g.key(0, x1) == g.key(0, x2)) as usize;
    }
    Ok(hits as f64 / trials as f64)
}

/// Amplification parameters and the query-time exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshParams {
    /// Atomic hashes concatenated per bucket key (`d'`).
    pub rows: usize,
    /// Number of independent tables (`L`).
    pub tables: usize,
    /// Query-time exponent `φ = ln(1/P1) / ln(1/P2)`.
    pub phi: f64,
}

/// Ceiling that ignores floating error just above an integer.
fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(1.0) as usize
}

/// `d' = ⌈ln n / ln(1/P2)⌉` so that `P2^{d'} ≤ 1/n`, and
/// `L = ⌈ln δ / ln(1 − P1^{d'})⌉` so that a point at distance `≤ R` is missed
/// by every table with probability at most `δ`. Both are at least 1.
pub fn lsh_params(p1: f64, p2: f64, n: usize, delta: f64) -> Result<LshParams> {
    check_probabilities(p1, p2)?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0,1)"));
    }
    let phi = (1.0 / p1).ln() / (1.0 / p2).ln();
    let rows = ceil_tolerant((n as f64).ln() / (1.0 / p2).ln());
    let p_col = p1.powi(rows as i32);
    let tables = ceil_tolerant(delta.ln() / (-p_col).ln_1p());
    Ok(LshParams { rows, tables, phi })
}

/// `rows × tables` atomic hashes. Column `j` concatenates its `rows`
/// sampled coordinates into the bucket key of table `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmplifiedHasher {
    dim: usize,
    rows: usize,
    tables: usize,
    /// Column-major: column `j` is `coords[j*rows .. (j+1)*rows]`.
    coords: Vec<usize>,
}

impl AmplifiedHasher {
    pub fn sample(dim: usize, rows: usize, tables: usize, rng: &mut Rng) -> Result<Self> {
        if rows == 0 || tables == 0 {
            return Err(invalid("rows/tables", "must be at least 1"));
        }
        let coords = (0..rows * tables)
            .map(|_| sample_bit_hash(dim, rng).map(|h| h.coord))
            .collect::<Result<_>>()?;
        Ok(AmplifiedHasher {
            dim,
            rows,
            tables,
            coords,
        })
    }

    pub fn from_params(dim: usize, params: &LshParams, rng: &mut Rng) -> Result<Self> {
        Self::sample(dim, params.rows, params.tables, rng)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn tables(&self) -> usize {
        self.tables
    }

    pub fn column(&self, j: usize) -> &[usize] {
        &self.coords[j * self.rows..(j + 1) * self.rows]
    }

    /// The `rows` sampled bits of column `j`, packed and folded into 64 bits.
    /// Distinct bit tuples may share a key; that only adds candidates.
    #[inline]
    pub fn key(&self, j: usize, x: &BitVector) -> u64 {
        let mut h = mix64(self.rows as u64);
        let mut word = 0u64;
        for (pos, &c) in self.column(j).iter().enumerate() {
            word |= (x.get(c) as u64) << (pos % 64);
            if pos % 64 == 63 {
                h = mix64(h ^ word);
                word = 0;
            }
        }
        if !self.rows.is_multiple_of(64) {
            h = mix64(h ^ word);
        }
        h
    }
}

/// Bucket tables over a bit-vector dataset, one per hasher column.
#[derive(Debug, Clone)]
pub struct LshIndex {
    data: Arc<LabeledDataset<BitVector>>,
    hasher: AmplifiedHasher,
    tables: Vec<HashMap<u64, Vec<u32>>>,
}

/// Result of a near-neighbor query with how much work it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearQuery {
    pub hit: Option<NeighborHit>,
    /// Distinct training ids found in the query's buckets.
    pub candidates: usize,
}

pub fn build_lsh_index(
    data: impl Into<Arc<LabeledDataset<BitVector>>>,
    hasher: AmplifiedHasher,
) -> Result<LshIndex> {
    let data = data.into();
    if let Some(d) = data.dim() {
        if d != hasher.dim {
            return Err(Error::DimensionMismatch {
                expected: hasher.dim,
                found: d,
            });
        }
    }
    let tables = (0..hasher.tables)
        .map(|j| {
            let mut table: HashMap<u64, Vec<u32>> = HashMap::new();
            for (i, p) in data.points().iter().enumerate() {
                table.entry(hasher.key(j, p)).or_default().push(i as u32);
            }
            table
        })
        .collect();
    Ok(LshIndex { data, hasher, tables })
}

impl LshIndex {
    pub fn dataset(&self) -> &Arc<LabeledDataset<BitVector>> {
        &self.data
    }

    pub fn hasher(&self) -> &AmplifiedHasher {
        &self.hasher
    }

    /// Bucket sizes of table `j`, in no particular order.
    pub fn bucket_sizes(&self, j: usize) -> Vec<usize> {
        self.tables[j].values().map(Vec::len).collect()
    }

    /// Every table holds the same ids in the same buckets.
    pub fn same_tables(&self, other: &LshIndex) -> bool {
        self.hasher == other.hasher && self.tables == other.tables
    }

    /// Distinct ids sharing at least one bucket with `q`, ascending.
    pub fn candidates(&self, q: &BitVector) -> Vec<u32> {
        let mut ids: Vec<u32> = Vec::new();
        for (j, table) in self.tables.iter().enumerate() {
            if let Some(bucket) = table.get(&self.hasher.key(j, q)) {
                ids.extend_from_slice(bucket);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The closest candidate within distance `cr`, if any.
    pub fn query_near(&self, q: &BitVector, cr: f64) -> Result<NearQuery> {
        self.data.check_query(q)?;
        let ids = self.candidates(q);
        let hit = ids
            .iter()
            .map(|&i| self.data.hit(i as usize, q))
            .filter(|h| h.distance <= cr)
            .min_by(NeighborHit::rank_cmp);
        Ok(NearQuery {
            hit,
            candidates: ids.len(),
        })
    }
}

pub fn query_near(index: &LshIndex, q: &BitVector, cr: f64) -> Result<NearQuery> {
    index.query_near(q, cr)
}

/// Near-neighbor indexes at radii `R_k = (1+γ)^k · R0 / c`.
#[derive(Debug, Clone)]
pub struct RadiusLadder {
    c: f64,
    rungs: Vec<(f64, LshIndex)>,
    min_distance: f64,
}

/// Sample size for the minimum-distance estimate.
const MIN_DISTANCE_SAMPLE: usize = 256;

/// Minimum nonzero pairwise distance among up to 256 sampled points, or 1
/// when the sample has no two distinct points.
pub fn estimate_min_distance(data: &LabeledDataset<BitVector>, rng: &mut Rng) -> f64 {
    let n = data.len();
    let sample: Vec<usize> = if n <= MIN_DISTANCE_SAMPLE {
        (0..n).collect()
    } else {
        rand::seq::index::sample(rng, n, MIN_DISTANCE_SAMPLE).into_vec()
    };
    let mut best = f64::INFINITY;
    for (a, &i) in sample.iter().enumerate() {
        for &j in &sample[a + 1..] {
            let d = data.point(i).dist(data.point(j));
            if d > 0.0 && d < best {
                best = d;
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        1.0
    }
}

impl RadiusLadder {
    /// Builds one index per rung whose far radius `c·R_k` stays below the
    /// dimension (so `P2 > 0`), with `δ` split evenly across rungs. The rung
    /// count is at most `⌈log_{1+γ}(c·d / R0)⌉ + 1`, which is `O(log d)`.
    pub fn build(
        data: impl Into<Arc<LabeledDataset<BitVector>>>,
        c: f64,
        gamma: f64,
        delta: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        let data = data.into();
        let d = data.dim().ok_or(Error::EmptyDataset)?;
        if !(gamma > 0.0) {
            return Err(invalid("gamma", "must be positive"));
        }
        if !(c > 1.0) {
            return Err(invalid("c", "approximation factor must exceed 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0,1)"));
        }
        let r0 = estimate_min_distance(&data, rng);
        let mut radii = Vec::new();
        let mut r = r0 / c;
        while c * r < d as f64 {
            radii.push(r);
            r *= 1.0 + gamma;
        }
        if radii.is_empty() {
            return Err(invalid("c", "no rung has c·R below the dimension"));
        }
        let rung_delta = delta / radii.len() as f64;
        let mut rungs = Vec::with_capacity(radii.len());
        for radius in radii {
            let family = LshFamilyParams::hamming(d, radius, c)?;
            let params = lsh_params(family.p1, family.p2, data.len(), rung_delta)?;
            let hasher = AmplifiedHasher::from_params(d, &params, rng)?;
            rungs.push((radius, build_lsh_index(data.clone(), hasher)?));
        }
        Ok(RadiusLadder {
            c,
            rungs,
            min_distance: r0,
        })
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.rungs.iter().map(|r| r.0)
    }

    pub fn min_distance_estimate(&self) -> f64 {
        self.min_distance
    }

    /// Queries every rung and returns the closest answer, together with the
    /// total number of candidates scanned.
    pub fn query(&self, q: &BitVector) -> Result<(NeighborHit, usize)> {
        let mut best: Option<NeighborHit> = None;
        let mut scanned = 0;
        for (radius, index) in &self.rungs {
            let found = index.query_near(q, self.c * radius)?;
            scanned += found.candidates;
            if let Some(hit) = found.hit {
                if best.is_none_or(|b| hit.rank_cmp(&b).is_lt()) {
                    best = Some(hit);
                }
            }
        }
        best.map(|b| (b, scanned)).ok_or(Error::LadderExhausted)
    }
}

pub fn nearest_via_ladder(
    data: impl Into<Arc<LabeledDataset<BitVector>>>,
    q: &BitVector,
    c: f64,
    gamma: f64,
    delta: f64,
    rng: &mut Rng,
) -> Result<NeighborHit> {
    RadiusLadder::build(data, c, gamma, delta, rng)?.query(q).map(|r| r.0)
}
