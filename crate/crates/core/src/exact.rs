//! Brute-force search and the k-d tree.

use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::space::{best_k, LabeledDataset, NeighborHit, Point, RealVector};

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    Ok(())
}

/// The `k` nearest points under the `(distance, priority, index)` order.
pub fn brute_force_knn<P: Point>(ds: &LabeledDataset<P>, q: &P, k: usize) -> Result<Vec<NeighborHit>> {
    ds.check_query(q)?;
    check_k(k, ds.len())?;
    let hits = (0..ds.len()).map(|i| ds.hit(i, q)).collect();
    Ok(best_k(hits, k))
}

/// All points within distance `h` of `q`, sorted.
pub fn fixed_radius_search<P: Point>(ds: &LabeledDataset<P>, q: &P, h: f64) -> Result<Vec<NeighborHit>> {
    if !(h > 0.0) {
        return Err(invalid("h", "radius must be positive"));
    }
    if ds.is_empty() {
        return Ok(Vec::new());
    }
    ds.check_query(q)?;
    let mut hits: Vec<NeighborHit> = (0..ds.len())
        .map(|i| ds.hit(i, q))
        .filter(|hit| hit.distance <= h)
        .collect();
    hits.sort_unstable_by(NeighborHit::rank_cmp);
    Ok(hits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryMode {
    #[default]
    Exact,
    /// Answer from the single leaf the query descends to.
    Defeatist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitRule {
    /// Coordinate `depth mod d`.
    #[default]
    Rotate,
    /// Coordinate with the widest range among the node's points.
    MaxSpread,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        coord: usize,
        value: f64,
        left: usize,
        right: usize,
    },
    /// Range into `KdTree::ids`.
    Leaf { start: usize, end: usize },
}

/// Median-split k-d tree. Points with coordinate `< value` go left, the rest
/// go right.
#[derive(Debug, Clone)]
pub struct KdTree {
    data: Arc<LabeledDataset<RealVector>>,
    nodes: Vec<Node>,
    ids: Vec<usize>,
    leaf_size: usize,
}

/// Work counters for a single query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub distance_evals: usize,
    pub leaves_visited: usize,
}

pub fn build_kdtree(data: impl Into<Arc<LabeledDataset<RealVector>>>, leaf_size: usize) -> Result<KdTree> {
    KdTree::build(data, leaf_size, SplitRule::Rotate)
}

impl KdTree {
    pub fn build(
        data: impl Into<Arc<LabeledDataset<RealVector>>>,
        leaf_size: usize,
        rule: SplitRule,
    ) -> Result<Self> {
        let data = data.into();
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if leaf_size == 0 {
            return Err(invalid("leaf_size", "must be at least 1"));
        }
        let mut tree = KdTree {
            nodes: Vec::new(),
            ids: (0..data.len()).collect(),
            leaf_size,
            data,
        };
        let n = tree.ids.len();
        tree.build_node(0, n, 0, rule);
        Ok(tree)
    }

    fn choose_coord(&self, start: usize, end: usize, depth: usize, rule: SplitRule) -> usize {
        let d = self.data.dim().unwrap_or(1);
        match rule {
            SplitRule::Rotate => depth % d,
            SplitRule::MaxSpread => {
                let mut best = (0, f64::NEG_INFINITY);
                for c in 0..d {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &i in &self.ids[start..end] {
                        let v = self.data.point(i)[c];
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    if hi - lo > best.1 {
                        best = (c, hi - lo);
                    }
                }
                best.0
            }
        }
    }

    /// Orders `ids[start..end]` so that points below the median value of
    /// `coord` come first; returns the median value and the split offset.
    /// The offset is zero when no point lies strictly below the median.
    fn partition(&mut self, start: usize, end: usize, coord: usize) -> (f64, usize) {
        let data = &self.data;
        let key = |i: &usize| (data.point(*i)[coord], *i);
        let slice = &mut self.ids[start..end];
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
        });
        let value = data.point(slice[mid])[coord];
        // Everything before `mid` is ≤ value; move the ties to the right.
        let (lower, upper) = slice.split_at_mut(mid);
        lower.sort_unstable_by(|a, b| key(a).0.total_cmp(&key(b).0).then(a.cmp(b)));
        let below = lower.partition_point(|i| data.point(*i)[coord] < value);
        upper.sort_unstable();
        (value, below)
    }

    fn build_node(&mut self, start: usize, end: usize, depth: usize, rule: SplitRule) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= self.leaf_size {
            return slot;
        }
        let d = self.data.dim().unwrap_or(1);
        let first = self.choose_coord(start, end, depth, rule);
        for attempt in 0..d {
            let coord = (first + attempt) % d;
            let (value, below) = self.partition(start, end, coord);
            if below == 0 {
                continue;
            }
            let split_at = start + below;
            let left = self.build_node(start, split_at, depth + 1, rule);
            let right = self.build_node(split_at, end, depth + 1, rule);
            self.nodes[slot] = Node::Split {
                coord,
                value,
                left,
                right,
            };
            return slot;
        }
        // Every coordinate is constant over these points: an oversize leaf.
        self.ids[start..end].sort_unstable();
        slot
    }

    pub fn dataset(&self) -> &Arc<LabeledDataset<RealVector>> {
        &self.data
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Point ids of every leaf, left to right.
    pub fn leaves(&self) -> Vec<&[usize]> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(at) = stack.pop() {
            match self.nodes[at] {
                Node::Leaf { start, end } => out.push(&self.ids[start..end]),
                Node::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    /// Checks the ordering invariant at every split.
    pub fn check_invariants(&self) -> bool {
        fn go(t: &KdTree, at: usize, bounds: &mut Vec<(f64, f64)>) -> bool {
            match t.nodes[at] {
                Node::Leaf { start, end } => t.ids[start..end].iter().all(|&i| {
                    let p = t.data.point(i);
                    bounds.iter().enumerate().all(|(c, &(lo, hi))| p[c] >= lo && p[c] < hi)
                }),
                Node::Split { coord, value, left, right } => {
                    let saved = bounds[coord];
                    bounds[coord].1 = saved.1.min(value);
                    let ok_left = go(t, left, bounds);
                    bounds[coord] = (saved.0.max(value), saved.1);
                    let ok_right = go(t, right, bounds);
                    bounds[coord] = saved;
                    ok_left && ok_right
                }
            }
        }
        let d = self.data.dim().unwrap_or(0);
        go(self, 0, &mut vec![(f64::NEG_INFINITY, f64::INFINITY); d])
    }

    /// Structural equality, ignoring the dataset handle.
    pub fn same_shape(&self, other: &KdTree) -> bool {
        self.nodes == other.nodes && self.ids == other.ids
    }

    pub fn knn(&self, q: &RealVector, k: usize, mode: QueryMode) -> Result<Vec<NeighborHit>> {
        self.knn_with_stats(q, k, mode).map(|(hits, _)| hits)
    }

    pub fn knn_with_stats(
        &self,
        q: &RealVector,
        k: usize,
        mode: QueryMode,
    ) -> Result<(Vec<NeighborHit>, SearchStats)> {
        self.data.check_query(q)?;
        match mode {
            QueryMode::Exact => {
                check_k(k, self.data.len())?;
                Ok(self.exact(q, k))
            }
            QueryMode::Defeatist => {
                if k == 0 {
                    return Err(invalid("k", "must be at least 1"));
                }
                Ok(self.defeatist(q, k))
            }
        }
    }

    fn leaf_of(&self, q: &RealVector) -> (usize, usize) {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { start, end } => return (start, end),
                Node::Split { coord, value, left, right } => {
                    at = if q[coord] < value { left } else { right };
                }
            }
        }
    }

    fn defeatist(&self, q: &RealVector, k: usize) -> (Vec<NeighborHit>, SearchStats) {
        let (start, end) = self.leaf_of(q);
        let hits = self.ids[start..end].iter().map(|&i| self.data.hit(i, q)).collect();
        let stats = SearchStats {
            distance_evals: end - start,
            leaves_visited: 1,
        };
        (best_k(hits, k), stats)
    }

    fn exact(&self, q: &RealVector, k: usize) -> (Vec<NeighborHit>, SearchStats) {
        let d = q.as_slice().len();
        let mut search = Backtrack {
            tree: self,
            q,
            k,
            heap: BinaryHeap::with_capacity(k + 1),
            gaps: vec![0.0; d],
            stats: SearchStats::default(),
        };
        search.visit(0);
        let mut hits: Vec<NeighborHit> = search.heap.into_iter().map(|r| r.0).collect();
        hits.sort_unstable_by(NeighborHit::rank_cmp);
        (hits, search.stats)
    }
}

/// Max-heap entry ordered by rank.
struct Ranked(NeighborHit);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.rank_cmp(&other.0)
    }
}

struct Backtrack<'a> {
    tree: &'a KdTree,
    q: &'a RealVector,
    k: usize,
    heap: BinaryHeap<Ranked>,
    /// Per-coordinate distance from the query to the current cell.
    gaps: Vec<f64>,
    stats: SearchStats,
}

impl Backtrack<'_> {
    /// Distance from the query to the current cell. The sum runs over the
    /// coordinates in the same order as the point distance, and each gap is
    /// at most the matching coordinate difference, so the bound never exceeds
    /// the computed distance of any point in the cell.
    fn cell_distance(&self) -> f64 {
        self.gaps.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    fn may_contain_better(&self, bound: f64) -> bool {
        self.heap.len() < self.k || self.heap.peek().is_some_and(|w| bound <= w.0.distance)
    }

    fn visit(&mut self, at: usize) {
        match self.tree.nodes[at] {
            Node::Leaf { start, end } => {
                self.stats.leaves_visited += 1;
                self.stats.distance_evals += end - start;
                for &i in &self.tree.ids[start..end] {
                    let hit = self.tree.data.hit(i, self.q);
                    if self.heap.len() < self.k {
                        self.heap.push(Ranked(hit));
                    } else if hit.rank_cmp(&self.heap.peek().expect("k ≥ 1").0).is_lt() {
                        self.heap.pop();
                        self.heap.push(Ranked(hit));
                    }
                }
            }
            Node::Split { coord, value, left, right } => {
                let x = self.q[coord];
                let (near, far) = if x < value { (left, right) } else { (right, left) };
                self.visit(near);
                let saved = self.gaps[coord];
                // Both sides are rounded the same way as a point coordinate
                // on the far side would be.
                let gap = (x - value).abs();
                if gap > saved {
                    self.gaps[coord] = gap;
                }
                if self.may_contain_better(self.cell_distance()) {
                    self.visit(far);
                }
                self.gaps[coord] = saved;
            }
        }
    }
}

pub fn kdtree_knn(tree: &KdTree, q: &RealVector, k: usize, mode: QueryMode) -> Result<Vec<NeighborHit>> {
    tree.knn(q, k, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng as _;

    fn dataset(points: Vec<Vec<f64>>, seed: u64) -> LabeledDataset<RealVector> {
        let pts = points.into_iter().map(|p| RealVector::new(p).unwrap()).collect();
        LabeledDataset::new(pts, None, &mut rng_from(seed)).unwrap()
    }

    fn random_dataset(n: usize, d: usize, seed: u64) -> LabeledDataset<RealVector> {
        let mut rng = rng_from(seed);
        let pts = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        dataset(pts, seed + 1)
    }

    fn rv(v: &[f64]) -> RealVector {
        RealVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn brute_force_full_sort_oracle() {
        let ds = random_dataset(50, 3, 1);
        let q = rv(&[0.3, 0.4, 0.5]);
        let mut all: Vec<(f64, f64, usize)> = (0..50)
            .map(|i| {
                let p = ds.point(i).as_slice();
                let d = ((p[0] - 0.3).powi(2) + (p[1] - 0.4).powi(2) + (p[2] - 0.5).powi(2)).sqrt();
                (d, ds.priorities()[i], i)
            })
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = brute_force_knn(&ds, &q, 5).unwrap();
        for (h, e) in got.iter().zip(&all) {
            assert_eq!(h.index, e.2);
            assert!((h.distance - e.0).abs() < 1e-12);
        }
        assert_eq!(brute_force_knn(&ds, &q, 50).unwrap().len(), 50);
        assert!(matches!(brute_force_knn(&ds, &q, 51), Err(Error::KTooLarge { .. })));
    }

    #[test]
    fn duplicates_rank_by_priority() {
        let pts = vec![rv(&[1.0]), rv(&[1.0]), rv(&[5.0])];
        let ds = LabeledDataset::with_priorities(pts, None, vec![0.8, 0.3, 0.0]).unwrap();
        let hits = brute_force_knn(&ds, &rv(&[1.0]), 2).unwrap();
        assert_eq!(hits[0].index, 1);
        assert_eq!(hits[1].index, 0);
    }

    #[test]
    fn fixed_radius_extremes_and_oracle() {
        let ds = random_dataset(100, 2, 4);
        let q = rv(&[5.0, 5.0]);
        assert!(fixed_radius_search(&ds, &q, 1.0).unwrap().is_empty());
        assert_eq!(fixed_radius_search(&ds, &q, 100.0).unwrap().len(), 100);
        let q = rv(&[0.5, 0.5]);
        let got: Vec<usize> = {
            let mut v: Vec<usize> = fixed_radius_search(&ds, &q, 0.2).unwrap().iter().map(|h| h.index).collect();
            v.sort();
            v
        };
        let want: Vec<usize> = (0..100).filter(|&i| ds.point(i).dist(&q) <= 0.2).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn small_dataset_is_one_leaf() {
        let ds = random_dataset(7, 2, 9);
        let tree = build_kdtree(ds.clone(), 10).unwrap();
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.leaves().len(), 1);
        let q = rv(&[0.1, 0.9]);
        let bf = brute_force_knn(&ds, &q, 3).unwrap();
        assert_eq!(tree.knn(&q, 3, QueryMode::Exact).unwrap(), bf);
        assert_eq!(tree.knn(&q, 3, QueryMode::Defeatist).unwrap(), bf);
    }

    #[test]
    fn eight_points_on_a_line_give_depth_three() {
        let ds = dataset((0..8).map(|i| vec![i as f64]).collect(), 2);
        let tree = build_kdtree(ds, 1).unwrap();
        assert_eq!(tree.depth(), 3);
        assert_eq!(tree.leaves().len(), 8);
        assert!(tree.check_invariants());
    }

    #[test]
    fn depth_bound_for_1000_points() {
        let tree = build_kdtree(random_dataset(1000, 2, 5), 10).unwrap();
        assert!(tree.depth() <= 7 + 1);
        assert!(tree.leaves().iter().all(|l| l.len() <= 10));
        assert!(tree.check_invariants());
    }

    #[test]
    fn defeatist_misses_across_the_split() {
        let ds = dataset(vec![vec![0.49], vec![0.51]], 3);
        let tree = build_kdtree(ds, 1).unwrap();
        // The split value is 0.51, so a query at 0.505 descends left to 0.49
        // although 0.51 is closer.
        let q = rv(&[0.505]);
        assert_eq!(tree.knn(&q, 1, QueryMode::Exact).unwrap()[0].index, 1);
        assert_eq!(tree.knn(&q, 1, QueryMode::Defeatist).unwrap()[0].index, 0);
    }

    #[test]
    fn identical_points_form_one_leaf() {
        let ds = dataset(vec![vec![1.0, 2.0]; 20], 6);
        let tree = build_kdtree(ds.clone(), 3).unwrap();
        assert_eq!(tree.leaves().len(), 1);
        let q = rv(&[1.0, 2.0]);
        assert_eq!(tree.knn(&q, 5, QueryMode::Exact).unwrap(), brute_force_knn(&ds, &q, 5).unwrap());
    }

    #[test]
    fn max_spread_rule_is_exact_too() {
        let ds = random_dataset(300, 3, 8);
        let tree = KdTree::build(ds.clone(), 4, SplitRule::MaxSpread).unwrap();
        assert!(tree.check_invariants());
        let q = rv(&[0.2, 0.7, 0.1]);
        assert_eq!(tree.knn(&q, 5, QueryMode::Exact).unwrap(), brute_force_knn(&ds, &q, 5).unwrap());
    }
}
