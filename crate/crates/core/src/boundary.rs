//! Boundary trees and forests: incremental structures that keep only the
//! points needed to answer greedy nearest-neighbor queries near label
//! changes.

use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::seed::derive_rng;
use crate::space::Point;

pub const DEFAULT_MAX_CHILDREN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InsertMode {
    /// Every inserted point is attached.
    Always,
    /// A point is attached only when its label differs from the label of
    /// the node its query reaches.
    #[default]
    ClassificationEdit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Root,
    Added { parent: usize },
    Discarded,
}

#[derive(Debug, Clone)]
pub struct BoundaryNode<P> {
    pub point: P,
    pub label: f64,
    /// Caller-supplied id of the stream element this node came from.
    pub source: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Result of a greedy traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeHit {
    pub node: usize,
    pub distance: f64,
    /// Distance evaluations spent on the traversal.
    pub touched: usize,
}

#[derive(Debug, Clone)]
pub struct BoundaryTree<P> {
    nodes: Vec<BoundaryNode<P>>,
    max_children: usize,
    mode: InsertMode,
}

impl<P: Point> BoundaryTree<P> {
    pub fn new(max_children: usize, mode: InsertMode) -> Result<Self> {
        if max_children == 0 {
            return Err(invalid("max_children", "must be at least 1"));
        }
        Ok(BoundaryTree {
            nodes: Vec::new(),
            max_children,
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[BoundaryNode<P>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &BoundaryNode<P> {
        &self.nodes[i]
    }

    pub fn max_children(&self) -> usize {
        self.max_children
    }

    pub fn mode(&self) -> InsertMode {
        self.mode
    }

    /// Whether the node at `i` is itself a candidate when the traversal
    /// stands on it. A node with a full child set is not: the search always
    /// moves on to its closest child, so new points never attach to it.
    fn competes(&self, i: usize) -> bool {
        self.nodes[i].children.len() < self.max_children
    }

    /// Greedy descent from the root. At each node the closest of its
    /// children, together with the node itself when it competes, is chosen;
    /// the walk stops when the node itself wins or it has no children.
    pub fn query(&self, q: &P) -> Result<TreeHit> {
        if self.nodes.is_empty() {
            return Err(invalid("tree", "query on an empty boundary tree"));
        }
        let root = &self.nodes[0].point;
        if root.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: root.dim(),
                found: q.dim(),
            });
        }
        let mut at = 0;
        let mut at_dist = self.nodes[0].point.dist(q);
        let mut touched = 1;
        loop {
            let node = &self.nodes[at];
            if node.children.is_empty() {
                break;
            }
            let mut best: Option<(usize, f64)> = if self.competes(at) { Some((at, at_dist)) } else { None };
            for &c in &node.children {
                let d = self.nodes[c].point.dist(q);
                touched += 1;
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((c, d));
                }
            }
            let (next, next_dist) = best.expect("children nonempty");
            if next == at {
                break;
            }
            at = next;
            at_dist = next_dist;
        }
        Ok(TreeHit {
            node: at,
            distance: at_dist,
            touched,
        })
    }

    pub fn insert(&mut self, point: P, label: f64, source: usize) -> Result<InsertOutcome> {
        if self.nodes.is_empty() {
            self.nodes.push(BoundaryNode {
                point,
                label,
                source,
                parent: None,
                children: Vec::new(),
            });
            return Ok(InsertOutcome::Root);
        }
        let hit = self.query(&point)?;
        if self.mode == InsertMode::ClassificationEdit && self.nodes[hit.node].label == label {
            return Ok(InsertOutcome::Discarded);
        }
        let id = self.nodes.len();
        self.nodes[hit.node].children.push(id);
        self.nodes.push(BoundaryNode {
            point,
            label,
            source,
            parent: Some(hit.node),
            children: Vec::new(),
        });
        Ok(InsertOutcome::Added { parent: hit.node })
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        // Parents always precede their children.
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                depth[i] = depth[p] + 1;
                max = max.max(depth[i]);
            }
        }
        max
    }

    pub fn respects_max_children(&self) -> bool {
        self.nodes.iter().all(|n| n.children.len() <= self.max_children)
    }

    /// No child carries its parent's label.
    pub fn respects_edit(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.parent.is_none_or(|p| self.nodes[p].label != n.label))
    }

    /// `(source, parent source)` per node, in insertion order.
    pub fn shape(&self) -> Vec<(usize, Option<usize>)> {
        self.nodes
            .iter()
            .map(|n| (n.source, n.parent.map(|p| self.nodes[p].source)))
            .collect()
    }
}

pub fn bt_query<P: Point>(tree: &BoundaryTree<P>, q: &P) -> Result<TreeHit> {
    tree.query(q)
}

pub fn bt_insert<P: Point>(tree: &mut BoundaryTree<P>, point: P, label: f64, source: usize) -> Result<InsertOutcome> {
    tree.insert(point, label, source)
}

#[derive(Debug, Clone)]
pub struct BoundaryForest<P> {
    trees: Vec<BoundaryTree<P>>,
}

/// Per-tree answer used by the forest vote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestVote {
    pub label: f64,
    pub distance: f64,
    pub touched: usize,
}

impl<P: Point> BoundaryForest<P> {
    pub fn empty(trees: usize, max_children: usize, mode: InsertMode) -> Result<Self> {
        if trees == 0 {
            return Err(invalid("trees", "must be at least 1"));
        }
        Ok(BoundaryForest {
            trees: (0..trees)
                .map(|_| BoundaryTree::new(max_children, mode))
                .collect::<Result<_>>()?,
        })
    }

    /// Builds `trees` trees over the stream, tree `t` inserting it in the
    /// order of a full permutation drawn from `(seed, "boundary", t)`.
    /// With `shuffle` off every tree sees the stream in its given order.
    pub fn build(
        points: &[P],
        labels: &[f64],
        trees: usize,
        max_children: usize,
        mode: InsertMode,
        shuffle: bool,
        seed: u64,
    ) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(invalid("labels", "length differs from the number of points"));
        }
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if trees == 0 {
            return Err(invalid("trees", "must be at least 1"));
        }
        let built = par::map_indexed(trees, |t| {
            let mut order: Vec<usize> = (0..points.len()).collect();
            if shuffle {
                order.shuffle(&mut derive_rng(seed, "boundary", t as u64));
            }
            let mut tree = BoundaryTree::new(max_children, mode)?;
            for i in order {
                tree.insert(points[i].clone(), labels[i], i)?;
            }
            Ok(tree)
        });
        Ok(BoundaryForest {
            trees: built.into_iter().collect::<Result<_>>()?,
        })
    }

    pub fn trees(&self) -> &[BoundaryTree<P>] {
        &self.trees
    }

    /// Streams one point into every tree.
    pub fn insert(&mut self, point: &P, label: f64, source: usize) -> Result<()> {
        for t in &mut self.trees {
            t.insert(point.clone(), label, source)?;
        }
        Ok(())
    }

    pub fn votes(&self, q: &P) -> Result<Vec<ForestVote>> {
        self.trees
            .iter()
            .map(|t| {
                let hit = t.query(q)?;
                Ok(ForestVote {
                    label: t.node(hit.node).label,
                    distance: hit.distance,
                    touched: hit.touched,
                })
            })
            .collect()
    }

    /// Most common per-tree label; a tie goes to the label of the closest
    /// per-tree answer.
    pub fn predict(&self, q: &P) -> Result<f64> {
        let votes = self.votes(q)?;
        let mut tally: Vec<(f64, usize)> = Vec::new();
        for v in &votes {
            match tally.iter_mut().find(|(l, _)| *l == v.label) {
                Some(entry) => entry.1 += 1,
                None => tally.push((v.label, 1)),
            }
        }
        let top = tally.iter().map(|t| t.1).max().expect("at least one tree");
        let leaders: Vec<f64> = tally.iter().filter(|t| t.1 == top).map(|t| t.0).collect();
        if leaders.len() == 1 {
            return Ok(leaders[0]);
        }
        let closest = votes
            .iter()
            .filter(|v| leaders.contains(&v.label))
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
            .expect("leaders come from votes");
        Ok(closest.label)
    }

    /// Mean of the per-tree labels. Experimental: the trees are built for
    /// classification and carry no regression guarantee.
    pub fn regress(&self, q: &P) -> Result<f64> {
        let votes = self.votes(q)?;
        Ok(votes.iter().map(|v| v.label).sum::<f64>() / votes.len() as f64)
    }
}

pub fn bf_predict<P: Point>(forest: &BoundaryForest<P>, q: &P) -> Result<f64> {
    forest.predict(q)
}
