use crate::error::{invalid, Error, Result};
use crate::exact::brute_force_knn;
use crate::par;
use crate::space::{best_k, sq_euclidean, LabeledDataset, NeighborHit, Point};

use super::regress::RegressionEstimate;

/// Two-layer nearest neighbors: points are compared through the labels of
/// their own `k` nearest neighbors rather than through their features, so
/// distant regions with similar label patterns can share information.
#[derive(Debug, Clone)]
pub struct TwoLayerKnn<'a, P> {
    ds: &'a LabeledDataset<P>,
    k: usize,
    proxies: Vec<Vec<f64>>,
}

impl<'a, P: Point> TwoLayerKnn<'a, P> {
    /// Precomputes every training point's proxy: the labels of its `k`
    /// nearest neighbors in rank order. With `include_self` the point counts
    /// as its own first neighbor; otherwise it is left out.
    pub fn fit(ds: &'a LabeledDataset<P>, k: usize, include_self: bool) -> Result<Self> {
        let labels = ds.require_labels()?;
        let n = ds.len();
        let needed = if include_self { k } else { k + 1 };
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if needed > n {
            return Err(Error::KTooLarge { k: needed, n });
        }
        let proxies = par::map_indexed(n, |i| {
            let q = ds.point(i);
            let hits: Vec<NeighborHit> = (0..n).filter(|&j| include_self || j != i).map(|j| ds.hit(j, q)).collect();
            best_k(hits, k).iter().map(|h| labels[h.index]).collect::<Vec<f64>>()
        });
        Ok(TwoLayerKnn { ds, k, proxies })
    }

    pub fn proxy(&self, i: usize) -> &[f64] {
        &self.proxies[i]
    }

    pub fn query_proxy(&self, q: &P) -> Result<Vec<f64>> {
        let labels = self.ds.require_labels()?;
        Ok(brute_force_knn(self.ds, q, self.k)?.iter().map(|h| labels[h.index]).collect())
    }

    /// The `k2` training points closest in proxy space, ranked with the same
    /// priority and index tie-breaks as feature-space search.
    pub fn proxy_neighbors(&self, q: &P, k2: usize) -> Result<Vec<NeighborHit>> {
        let n = self.ds.len();
        if k2 == 0 {
            return Err(invalid("k2", "must be at least 1"));
        }
        if k2 > n {
            return Err(Error::KTooLarge { k: k2, n });
        }
        let pq = self.query_proxy(q)?;
        let hits = self
            .proxies
            .iter()
            .enumerate()
            .map(|(i, p)| NeighborHit {
                index: i,
                distance: sq_euclidean(&pq, p).sqrt(),
                priority: self.ds.priorities()[i],
            })
            .collect();
        Ok(best_k(hits, k2))
    }

    pub fn predict(&self, q: &P, k2: usize) -> Result<RegressionEstimate> {
        let labels = self.ds.require_labels()?;
        let hits = self.proxy_neighbors(q, k2)?;
        Ok(RegressionEstimate::mean_of(hits.iter().map(|h| labels[h.index])))
    }
}

pub fn two_layer_knn<P: Point>(ds: &LabeledDataset<P>, q: &P, k: usize, k2: usize) -> Result<RegressionEstimate> {
    TwoLayerKnn::fit(ds, k, true)?.predict(q, k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::knn_regress;
    use crate::seed::rng_from;
    use crate::space::RealVector;
    use rand::Rng as _;

    fn line(n: usize, seed: u64, f: impl Fn(f64) -> f64) -> LabeledDataset<RealVector> {
        let mut rng = rng_from(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        let labels = xs.iter().map(|&x| f(x)).collect();
        let pts = xs.into_iter().map(|x| RealVector::new(vec![x]).unwrap()).collect();
        LabeledDataset::new(pts, Some(labels), &mut rng).unwrap()
    }

    #[test]
    fn full_k2_gives_global_mean() {
        let ds = line(30, 1, |x| x * x);
        let mean = ds.labels().unwrap().iter().sum::<f64>() / 30.0;
        let q = RealVector::new(vec![1.3]).unwrap();
        assert!((two_layer_knn(&ds, &q, 3, 30).unwrap().value - mean).abs() < 1e-12);
    }

    #[test]
    fn constant_target_matches_plain_knn() {
        let ds = line(40, 2, |_| 0.7);
        let q = RealVector::new(vec![2.2]).unwrap();
        assert_eq!(two_layer_knn(&ds, &q, 4, 6).unwrap().value, knn_regress(&ds, &q, 6).unwrap().value);
    }

    #[test]
    fn self_is_first_proxy_neighbor() {
        let ds = line(50, 3, |x| (x * 3.0).sin());
        let model = TwoLayerKnn::fit(&ds, 3, true).unwrap();
        for i in 0..50 {
            assert_eq!(model.proxy(i)[0], ds.labels().unwrap()[i]);
            let hits = model.proxy_neighbors(ds.point(i), 1).unwrap();
            assert_eq!(hits[0].distance, 0.0);
        }
    }

    #[test]
    fn leave_one_out_excludes_self() {
        let pts = vec![RealVector::new(vec![0.0]).unwrap(), RealVector::new(vec![10.0]).unwrap()];
        let ds = LabeledDataset::new(pts, Some(vec![1.0, 2.0]), &mut rng_from(1)).unwrap();
        let model = TwoLayerKnn::fit(&ds, 1, false).unwrap();
        assert_eq!(model.proxy(0), &[2.0]);
        assert_eq!(model.proxy(1), &[1.0]);
        assert!(TwoLayerKnn::fit(&ds, 2, false).is_err());
    }
}
