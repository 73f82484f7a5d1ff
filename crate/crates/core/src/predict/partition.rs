use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::seed::derive_rng;
use crate::space::{LabeledDataset, RealVector};

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Split {
        coord: usize,
        value: f64,
        left: usize,
        right: usize,
    },
    Region(usize),
}

/// A partition of feature space into axis-aligned boxes, each remembering
/// the training ids that fell into it. Ids may repeat (bootstrap samples).
#[derive(Debug, Clone)]
pub struct PartitionKernel {
    cells: Vec<Cell>,
    members: Vec<Vec<usize>>,
    means: Vec<f64>,
    n_train: usize,
}

struct Grower<'a> {
    ds: &'a LabeledDataset<RealVector>,
    labels: &'a [f64],
    min_leaf: usize,
    max_depth: usize,
    cells: Vec<Cell>,
    members: Vec<Vec<usize>>,
}

impl Grower<'_> {
    /// Best axis-aligned cut by variance reduction; the cut sits midway
    /// between two consecutive distinct coordinate values.
    fn best_split(&self, ids: &[usize]) -> Option<(usize, f64)> {
        let d = self.ds.dim()?;
        let n = ids.len();
        let total: f64 = ids.iter().map(|&i| self.labels[i]).sum();
        let parent = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = ids.to_vec();
        for coord in 0..d {
            let x = |i: usize| self.ds.point(i)[coord];
            sorted.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for cut in 1..n {
                left_sum += self.labels[sorted[cut - 1]];
                if cut < self.min_leaf || n - cut < self.min_leaf {
                    continue;
                }
                let (lo, hi) = (x(sorted[cut - 1]), x(sorted[cut]));
                if lo == hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / cut as f64 + right_sum * right_sum / (n - cut) as f64 - parent;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some((gain, coord, if mid > lo { mid } else { hi }));
                }
            }
        }
        best.map(|b| (b.1, b.2))
    }

    fn grow(&mut self, ids: Vec<usize>, depth: usize) -> usize {
        let slot = self.cells.len();
        self.cells.push(Cell::Region(usize::MAX));
        let split = if depth < self.max_depth && ids.len() >= 2 * self.min_leaf {
            self.best_split(&ids)
        } else {
            None
        };
        match split {
            Some((coord, value)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = ids.into_iter().partition(|&i| self.ds.point(i)[coord] < value);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                self.cells[slot] = Cell::Split { coord, value, left, right };
            }
            None => {
                self.cells[slot] = Cell::Region(self.members.len());
                self.members.push(ids);
            }
        }
        slot
    }
}

impl PartitionKernel {
    /// Greedy regression tree on the sample `ids` of `ds` (repeats allowed),
    /// splitting while both children keep at least `min_leaf` members.
    pub fn fit_on(ds: &LabeledDataset<RealVector>, ids: Vec<usize>, min_leaf: usize, max_depth: usize) -> Result<Self> {
        let labels = ds.require_labels()?;
        if ids.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if min_leaf == 0 {
            return Err(invalid("min_leaf", "must be at least 1"));
        }
        let mut g = Grower {
            ds,
            labels,
            min_leaf,
            max_depth,
            cells: Vec::new(),
            members: Vec::new(),
        };
        g.grow(ids, 0);
        let means = g
            .members
            .iter()
            .map(|m| m.iter().map(|&i| labels[i]).sum::<f64>() / m.len() as f64)
            .collect();
        Ok(PartitionKernel {
            cells: g.cells,
            members: g.members,
            means,
            n_train: ds.len(),
        })
    }

    pub fn fit(ds: &LabeledDataset<RealVector>, min_leaf: usize) -> Result<Self> {
        Self::fit_on(ds, (0..ds.len()).collect(), min_leaf, usize::MAX)
    }

    pub fn regions(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, region: usize) -> &[usize] {
        &self.members[region]
    }

    /// Mean label of the region's members.
    pub fn region_mean(&self, region: usize) -> f64 {
        self.means[region]
    }

    pub fn region_of(&self, q: &RealVector) -> usize {
        let mut at = 0;
        loop {
            match self.cells[at] {
                Cell::Region(r) => return r,
                Cell::Split { coord, value, left, right } => {
                    at = if q[coord] < value { left } else { right };
                }
            }
        }
    }

    /// Weight `m_i / |N_j|` for each training id with `m_i` copies in the
    /// query's region `N_j`.
    pub fn weights(&self, q: &RealVector) -> Result<Vec<f64>> {
        let members = &self.members[self.region_of(q)];
        if members.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let share = 1.0 / members.len() as f64;
        let mut w = vec![0.0; self.n_train];
        for &i in members {
            w[i] += share;
        }
        Ok(w)
    }

    pub fn predict(&self, q: &RealVector) -> f64 {
        self.means[self.region_of(q)]
    }
}

pub fn partition_kernel_weights(pk: &PartitionKernel, q: &RealVector) -> Result<Vec<f64>> {
    pk.weights(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMode {
    /// Coefficients all `1/B`.
    Bagging,
    /// Nonnegative coefficients from a boosting run.
    Boosting,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<(PartitionKernel, f64)>,
    mode: EnsembleMode,
}

impl Ensemble {
    pub fn new(members: Vec<(PartitionKernel, f64)>, mode: EnsembleMode) -> Result<Self> {
        if members.is_empty() {
            return Err(invalid("members", "ensemble needs at least one member"));
        }
        match mode {
            EnsembleMode::Bagging => {
                let expect = 1.0 / members.len() as f64;
                if members.iter().any(|m| (m.1 - expect).abs() > 1e-12) {
                    return Err(invalid("coefficients", "bagging coefficients must all be 1/B"));
                }
            }
            EnsembleMode::Boosting => {
                if members.iter().any(|m| !(m.1 >= 0.0 && m.1.is_finite())) {
                    return Err(invalid("coefficients", "boosting coefficients must be nonnegative"));
                }
            }
        }
        let n = members[0].0.n_train;
        if members.iter().any(|m| m.0.n_train != n) {
            return Err(invalid("members", "members were trained on different datasets"));
        }
        Ok(Ensemble { members, mode })
    }

    /// `b` trees, each grown on a bootstrap resample drawn from
    /// `(seed, "bagging", b)`.
    pub fn bagged(ds: &LabeledDataset<RealVector>, b: usize, min_leaf: usize, seed: u64) -> Result<Self> {
        if b == 0 {
            return Err(invalid("b", "ensemble needs at least one member"));
        }
        let n = ds.len();
        let members = (0..b)
            .map(|t| {
                let mut rng = derive_rng(seed, "bagging", t as u64);
                let ids = (0..n).map(|_| rng.random_range(0..n)).collect();
                PartitionKernel::fit_on(ds, ids, min_leaf, usize::MAX).map(|pk| (pk, 1.0 / b as f64))
            })
            .collect::<Result<_>>()?;
        Self::new(members, EnsembleMode::Bagging)
    }

    pub fn mode(&self) -> EnsembleMode {
        self.mode
    }

    pub fn members(&self) -> &[(PartitionKernel, f64)] {
        &self.members
    }

    /// `Σ_t coeff_t · w_t(q)`.
    pub fn weights(&self, q: &RealVector) -> Result<Vec<f64>> {
        let mut total = vec![0.0; self.members[0].0.n_train];
        for (pk, coeff) in &self.members {
            for (acc, w) in total.iter_mut().zip(pk.weights(q)?) {
                *acc += coeff * w;
            }
        }
        Ok(total)
    }

    pub fn predict(&self, q: &RealVector, labels: &[f64]) -> Result<f64> {
        Ok(self.weights(q)?.iter().zip(labels).map(|(w, y)| w * y).sum())
    }
}

pub fn ensemble_kernel_weights(ensemble: &Ensemble, q: &RealVector) -> Result<Vec<f64>> {
    ensemble.weights(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn step_data(seed: u64) -> LabeledDataset<RealVector> {
        let mut rng = rng_from(seed);
        let pts: Vec<RealVector> = (0..200)
            .map(|_| RealVector::new(vec![rng.random::<f64>(), rng.random::<f64>()]).unwrap())
            .collect();
        let labels = pts.iter().map(|p| if p[0] < 0.5 { 0.0 } else { 1.0 } + 0.1 * rng.random::<f64>()).collect();
        LabeledDataset::new(pts, Some(labels), &mut rng).unwrap()
    }

    #[test]
    fn weights_are_uniform_over_the_region() {
        let ds = step_data(1);
        let pk = PartitionKernel::fit(&ds, 5).unwrap();
        assert!(pk.regions() > 1);
        let q = RealVector::new(vec![0.3, 0.8]).unwrap();
        let w = pk.weights(&q).unwrap();
        let region = pk.members(pk.region_of(&q));
        assert!(region.len() >= 5);
        for &i in region {
            assert!((w[i] - 1.0 / region.len() as f64).abs() < 1e-15);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let labels = ds.labels().unwrap();
        let pred: f64 = w.iter().zip(labels).map(|(a, b)| a * b).sum();
        let mean = region.iter().map(|&i| labels[i]).sum::<f64>() / region.len() as f64;
        assert!((pred - mean).abs() < 1e-12);
        assert!((pk.predict(&q) - mean).abs() < 1e-12);
    }

    #[test]
    fn regions_respect_min_leaf() {
        let pk = PartitionKernel::fit(&step_data(2), 5).unwrap();
        assert!((0..pk.regions()).all(|r| pk.members(r).len() >= 5));
        let total: usize = (0..pk.regions()).map(|r| pk.members(r).len()).sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn single_bag_equals_its_member() {
        let ds = step_data(3);
        let e = Ensemble::bagged(&ds, 1, 5, 9).unwrap();
        let q = RealVector::new(vec![0.6, 0.1]).unwrap();
        assert_eq!(e.weights(&q).unwrap(), e.members()[0].0.weights(&q).unwrap());
    }

    #[test]
    fn coefficient_rules() {
        let ds = step_data(4);
        let pk = PartitionKernel::fit(&ds, 5).unwrap();
        assert!(Ensemble::new(vec![(pk.clone(), 0.7)], EnsembleMode::Bagging).is_err());
        assert!(Ensemble::new(vec![(pk.clone(), -0.1)], EnsembleMode::Boosting).is_err());
        assert!(Ensemble::new(vec![], EnsembleMode::Boosting).is_err());
        assert!(Ensemble::new(vec![(pk, 2.5)], EnsembleMode::Boosting).is_ok());
    }
}
