//! Points, datasets and search results.

use std::cmp::Ordering;


use crate::error::{invalid, Error, Result};

/// A point of a metric space that the search structures can index.
pub trait Point: Clone + Send + Sync {
    fn dim(&self) -> usize;

    /// Distance to a point of the same dimension. Callers guarantee the
    /// dimensions agree; use [`euclidean`] or [`hamming`] for checked access.
    fn dist(&self, other: &Self) -> f64;
}

/// A finite real vector of dimension at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("components", "dimension must be at least 1"));
        }
        if let Some(i) = components.iter().position(|c| !c.is_finite()) {
            return Err(invalid("components", format!("component {i} is not finite")));
        }
        Ok(RealVector(components))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for RealVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[inline]
pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Point for RealVector {
    fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    fn dist(&self, other: &Self) -> f64 {
        sq_euclidean(&self.0, &other.0).sqrt()
    }
}

/// A vector in `{0,1}^d`, packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    dim: usize,
}

impl BitVector {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be at least 1"));
        }
        Ok(BitVector {
            words: vec![0; dim.div_ceil(64)],
            dim,
        })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut v = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        Ok(v)
    }

    /// Parses a contiguous string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid("bits", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }

    pub fn random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let mut v = Self::zeros(dim)?;
        for w in v.words.iter_mut() {
            *w = rng.random();
        }
        v.clear_tail();
        Ok(v)
    }

    fn clear_tail(&mut self) {
        let rem = self.dim % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub(crate) fn hamming_unchecked(&self, other: &Self) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

impl std::fmt::Display for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.dim {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Point for BitVector {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn dist(&self, other: &Self) -> f64 {
        self.hamming_unchecked(other) as f64
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

pub fn euclidean(a: &RealVector, b: &RealVector) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.dist(b))
}

pub fn hamming(a: &BitVector, b: &BitVector) -> Result<u32> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.hamming_unchecked(b))
}

/// One search result: a training id with its distance to the query and its
/// tie-break priority.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborHit {
    pub index: usize,
    pub distance: f64,
    pub priority: f64,
}

impl NeighborHit {
    /// Lexicographic order on `(distance, priority, index)`. Distances tie
    /// only on exact equality.
    #[inline]
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.priority.total_cmp(&other.priority))
            .then_with(|| self.index.cmp(&other.index))
    }
}

/// Sorts `hits` by rank and keeps the first `k`.
pub fn best_k(mut hits: Vec<NeighborHit>, k: usize) -> Vec<NeighborHit> {
    if k == 0 {
        hits.clear();
        return hits;
    }
    if hits.len() > k {
        hits.select_nth_unstable_by(k - 1, NeighborHit::rank_cmp);
        hits.truncate(k);
    }
    hits.sort_unstable_by(NeighborHit::rank_cmp);
    hits
}

/// Points with optional labels and one fixed random priority per point.
#[derive(Debug, Clone)]
pub struct LabeledDataset<P> {
    points: Vec<P>,
    labels: Option<Vec<f64>>,
    priorities: Vec<f64>,
}

impl<P: Point> LabeledDataset<P> {
    /// Builds a dataset, drawing priorities uniformly on `[0,1)` from `rng`.
    pub fn new<R: rand::Rng + ?Sized>(
        points: Vec<P>,
        labels: Option<Vec<f64>>,
        rng: &mut R,
    ) -> Result<Self> {
        let priorities = (0..points.len()).map(|_| rng.random::<f64>()).collect();
        Self::with_priorities(points, labels, priorities)
    }

    pub fn with_priorities(
        points: Vec<P>,
        labels: Option<Vec<f64>>,
        priorities: Vec<f64>,
    ) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.dim();
            for p in &points {
                check_dims(d, p.dim())?;
            }
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(invalid("labels", "length differs from the number of points"));
            }
            if l.iter().any(|y| !y.is_finite()) {
                return Err(invalid("labels", "labels must be finite"));
            }
        }
        if priorities.len() != points.len() {
            return Err(invalid("priorities", "length differs from the number of points"));
        }
        if priorities.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(invalid("priorities", "priorities must lie in [0,1]"));
        }
        Ok(LabeledDataset {
            points,
            labels,
            priorities,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of the points; `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &P {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[f64]> {
        self.labels.as_deref().ok_or(Error::MissingLabels)
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    pub fn check_query(&self, q: &P) -> Result<()> {
        match self.dim() {
            Some(d) => check_dims(d, q.dim()),
            None => Err(Error::EmptyDataset),
        }
    }

    #[inline]
    pub fn hit(&self, index: usize, q: &P) -> NeighborHit {
        NeighborHit {
            index,
            distance: self.points[index].dist(q),
            priority: self.priorities[index],
        }
    }
}
