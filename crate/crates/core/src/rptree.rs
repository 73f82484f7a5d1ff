//! Random projection trees and forests with defeatist queries.

use std::sync::Arc;

use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::seed::{derive_rng, Rng};
use crate::space::{best_k, sq_euclidean, LabeledDataset, NeighborHit, RealVector};

/// Redraws allowed when a direction leaves one side of a split empty.
const MAX_REDRAWS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        direction: Vec<f64>,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { start: usize, end: usize },
}

/// A tree splitting at the median projection onto a random Gaussian
/// direction. Points with `v·x < threshold` go left.
#[derive(Debug, Clone)]
pub struct RpTree {
    data: Arc<LabeledDataset<RealVector>>,
    nodes: Vec<Node>,
    ids: Vec<usize>,
    leaf_size: usize,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn build_rp_tree(
    data: impl Into<Arc<LabeledDataset<RealVector>>>,
    leaf_size: usize,
    rng: &mut Rng,
) -> Result<RpTree> {
    let data = data.into();
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if leaf_size == 0 {
        return Err(invalid("leaf_size", "must be at least 1"));
    }
    let d = data.dim().expect("nonempty");
    let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("positive scale");
    let mut tree = RpTree {
        nodes: Vec::new(),
        ids: (0..data.len()).collect(),
        leaf_size,
        data,
    };
    let n = tree.ids.len();
    let mut proj = vec![0.0; n];
    tree.build_node(0, n, &normal, &mut proj, rng);
    Ok(tree)
}

impl RpTree {
    fn build_node(&mut self, start: usize, end: usize, normal: &Normal<f64>, proj: &mut [f64], rng: &mut Rng) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= self.leaf_size {
            return slot;
        }
        let d = self.data.dim().expect("nonempty");
        for _ in 0..MAX_REDRAWS {
            let direction: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
            for &i in &self.ids[start..end] {
                proj[i] = dot(&direction, self.data.point(i).as_slice());
            }
            let slice = &mut self.ids[start..end];
            slice.sort_unstable_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
            let threshold = proj[slice[slice.len() / 2]];
            let below = slice.partition_point(|&i| proj[i] < threshold);
            if below == 0 {
                continue;
            }
            slice[below..].sort_unstable();
            slice[..below].sort_unstable();
            let split_at = start + below;
            let left = self.build_node(start, split_at, normal, proj, rng);
            let right = self.build_node(split_at, end, normal, proj, rng);
            self.nodes[slot] = Node::Split {
                direction,
                threshold,
                left,
                right,
            };
            return slot;
        }
        self.ids[start..end].sort_unstable();
        slot
    }

    pub fn dataset(&self) -> &Arc<LabeledDataset<RealVector>> {
        &self.data
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaves(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { start, end } => Some(&self.ids[*start..*end]),
                Node::Split { .. } => None,
            })
            .collect()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn same_shape(&self, other: &RpTree) -> bool {
        self.nodes == other.nodes && self.ids == other.ids
    }

    /// Ids of the leaf that `q` descends to.
    pub fn leaf_of(&self, q: &RealVector) -> &[usize] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { start, end } => return &self.ids[*start..*end],
                Node::Split { direction, threshold, left, right } => {
                    at = if dot(direction, q.as_slice()) < *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Best `≤ k` points of the leaf that `q` reaches.
    pub fn defeatist_query(&self, q: &RealVector, k: usize) -> Result<Vec<NeighborHit>> {
        self.data.check_query(q)?;
        let hits = self.leaf_of(q).iter().map(|&i| self.data.hit(i, q)).collect();
        Ok(best_k(hits, k))
    }
}

pub fn rp_defeatist_query(tree: &RpTree, q: &RealVector, k: usize) -> Result<Vec<NeighborHit>> {
    tree.defeatist_query(q, k)
}

/// Independently seeded trees over one dataset.
#[derive(Debug, Clone)]
pub struct RpForest {
    trees: Vec<RpTree>,
}

impl RpForest {
    /// Tree `t` draws its directions from the stream derived from
    /// `(seed, "rptree", t)`.
    pub fn build(
        data: impl Into<Arc<LabeledDataset<RealVector>>>,
        leaf_size: usize,
        trees: usize,
        seed: u64,
    ) -> Result<Self> {
        if trees == 0 {
            return Err(invalid("trees", "must be at least 1"));
        }
        let data = data.into();
        let built = par::map_indexed(trees, |t| {
            build_rp_tree(data.clone(), leaf_size, &mut derive_rng(seed, "rptree", t as u64))
        });
        Ok(RpForest {
            trees: built.into_iter().collect::<Result<_>>()?,
        })
    }

    pub fn from_trees(trees: Vec<RpTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(invalid("trees", "must be at least 1"));
        }
        Ok(RpForest { trees })
    }

    pub fn trees(&self) -> &[RpTree] {
        &self.trees
    }

    /// Forest of the first `count` trees.
    pub fn prefix(&self, count: usize) -> Result<Self> {
        Self::from_trees(self.trees[..count.min(self.trees.len())].to_vec())
    }

    /// Union of the leaves `q` reaches, ascending and deduplicated.
    pub fn candidates(&self, q: &RealVector) -> Vec<usize> {
        let mut ids: Vec<usize> = self.trees.iter().flat_map(|t| t.leaf_of(q).iter().copied()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn query(&self, q: &RealVector, k: usize) -> Result<Vec<NeighborHit>> {
        self.query_with_candidates(q, k).map(|r| r.0)
    }

    pub fn query_with_candidates(&self, q: &RealVector, k: usize) -> Result<(Vec<NeighborHit>, usize)> {
        let data = self.trees[0].dataset();
        data.check_query(q)?;
        let ids = self.candidates(q);
        let count = ids.len();
        let hits = ids.into_iter().map(|i| data.hit(i, q)).collect();
        Ok((best_k(hits, k), count))
    }
}

pub fn rp_forest_query(forest: &RpForest, q: &RealVector, k: usize) -> Result<Vec<NeighborHit>> {
    forest.query(q, k)
}

/// `(1/n) Σ_{i≥2} ρ(q, X_(1)) / ρ(q, X_(i))`: how close the rest of the
/// dataset crowds around the nearest neighbor.
pub fn potential_phi(data: &LabeledDataset<RealVector>, q: &RealVector) -> Result<f64> {
    data.check_query(q)?;
    let n = data.len();
    if n < 2 {
        return Err(invalid("n", "potential needs at least two points"));
    }
    let mut dists: Vec<f64> = data
        .points()
        .iter()
        .map(|p| sq_euclidean(p.as_slice(), q.as_slice()).sqrt())
        .collect();
    let (nearest_at, _) = dists
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("n ≥ 2");
    let nearest = dists.swap_remove(nearest_at);
    if nearest == 0.0 {
        return Err(Error::DuplicateOfQuery);
    }
    Ok(dists.iter().map(|d| nearest / d).sum::<f64>() / n as f64)
}

/// Fraction of queries whose true nearest neighbor id appears first in the
/// approximate answer.
pub fn recall_at_1(approx: &[Vec<NeighborHit>], exact: &[NeighborHit]) -> f64 {
    let hits = approx
        .iter()
        .zip(exact)
        .filter(|(a, e)| a.first().is_some_and(|h| h.index == e.index))
        .count();
    hits as f64 / exact.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_knn;
    use crate::seed::rng_from;
    use rand::Rng as _;

    fn random_dataset(n: usize, d: usize, seed: u64) -> LabeledDataset<RealVector> {
        let mut rng = rng_from(seed);
        let pts = (0..n)
            .map(|_| RealVector::new((0..d).map(|_| rng.random::<f64>()).collect()).unwrap())
            .collect();
        LabeledDataset::new(pts, None, &mut rng).unwrap()
    }

    #[test]
    fn small_dataset_is_a_leaf() {
        let ds = random_dataset(5, 3, 1);
        let tree = build_rp_tree(ds.clone(), 5, &mut rng_from(2)).unwrap();
        assert_eq!(tree.depth(), 0);
        let q = RealVector::new(vec![0.5, 0.5, 0.5]).unwrap();
        assert_eq!(tree.defeatist_query(&q, 3).unwrap(), brute_force_knn(&ds, &q, 3).unwrap());
    }

    #[test]
    fn sixteen_points_give_depth_four() {
        let tree = build_rp_tree(random_dataset(16, 4, 3), 1, &mut rng_from(4)).unwrap();
        assert_eq!(tree.depth(), 4);
        assert_eq!(tree.leaves().len(), 16);
    }

    #[test]
    fn same_seed_same_tree() {
        let ds = Arc::new(random_dataset(300, 5, 5));
        let a = build_rp_tree(ds.clone(), 7, &mut rng_from(6)).unwrap();
        let b = build_rp_tree(ds.clone(), 7, &mut rng_from(6)).unwrap();
        let c = build_rp_tree(ds, 7, &mut rng_from(7)).unwrap();
        assert!(a.same_shape(&b));
        assert!(!a.same_shape(&c));
    }

    #[test]
    fn every_id_in_exactly_one_leaf() {
        let tree = build_rp_tree(random_dataset(500, 6, 8), 9, &mut rng_from(9)).unwrap();
        let mut ids: Vec<usize> = tree.leaves().concat();
        ids.sort();
        assert_eq!(ids, (0..500).collect::<Vec<_>>());
        assert!(tree.leaves().iter().all(|l| l.len() <= 9));
    }

    #[test]
    fn training_point_query_hits_itself() {
        let ds = random_dataset(200, 3, 10);
        let tree = build_rp_tree(ds.clone(), 4, &mut rng_from(11)).unwrap();
        for i in 0..200 {
            let hits = tree.defeatist_query(ds.point(i), 1).unwrap();
            assert_eq!(hits[0].distance, 0.0);
        }
    }

    #[test]
    fn identical_points_stop_splitting() {
        let pts = vec![RealVector::new(vec![1.0, 1.0]).unwrap(); 30];
        let ds = LabeledDataset::new(pts, None, &mut rng_from(1)).unwrap();
        let tree = build_rp_tree(ds, 2, &mut rng_from(2)).unwrap();
        assert_eq!(tree.leaves().len(), 1);
    }

    #[test]
    fn phi_examples() {
        // Every other point at the nearest distance.
        let pts: Vec<RealVector> = [1.0, -1.0, 1.0, -1.0]
            .iter()
            .map(|&x| RealVector::new(vec![x]).unwrap())
            .collect();
        let ds = LabeledDataset::new(pts, None, &mut rng_from(1)).unwrap();
        let q = RealVector::new(vec![0.0]).unwrap();
        assert!((potential_phi(&ds, &q).unwrap() - 0.75).abs() < 1e-15);

        let n = 40;
        let grid: Vec<RealVector> = (1..=n).map(|z| RealVector::new(vec![z as f64]).unwrap()).collect();
        let ds = LabeledDataset::new(grid, None, &mut rng_from(2)).unwrap();
        let harmonic: f64 = (2..=n).map(|z| 1.0 / z as f64).sum::<f64>() / n as f64;
        assert!((potential_phi(&ds, &q).unwrap() - harmonic).abs() < 1e-12);

        assert_eq!(potential_phi(&ds, &RealVector::new(vec![3.0]).unwrap()), Err(Error::DuplicateOfQuery));
    }
}
