use std::sync::Arc;

use neighborly::exact::brute_force_knn;
use neighborly::rptree::{build_rp_tree, potential_phi, recall_at_1, RpForest};
use neighborly::seed::{derive_rng, rng_from};
use neighborly::synth::{manifold_points, uniform_points};
use neighborly::{LabeledDataset, RealVector};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn manifold(n: usize, seed: u64) -> (Arc<LabeledDataset<RealVector>>, Vec<RealVector>) {
    let mut rng = rng_from(seed);
    let mut pts = manifold_points(n + 200, 3, 20, &mut rng).unwrap();
    let queries = pts.split_off(n);
    (Arc::new(LabeledDataset::new(pts, None, &mut rng).unwrap()), queries)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_id_in_exactly_one_leaf(n in 1usize..400, d in 1usize..6, leaf in 1usize..16, seed: u64) {
        let mut rng = rng_from(seed);
        let ds = LabeledDataset::new(uniform_points(n, d, &mut rng).unwrap(), None, &mut rng).unwrap();
        let tree = build_rp_tree(ds, leaf, &mut rng).unwrap();
        let mut seen = vec![0; n];
        for l in tree.leaves() {
            for &i in l {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn recall_nondecreasing_in_trees(n in 50usize..400, leaf in 2usize..12, seed: u64) {
        let mut rng = rng_from(seed);
        let pts = uniform_points(n + 30, 4, &mut rng).unwrap();
        let ds = Arc::new(LabeledDataset::new(pts[..n].to_vec(), None, &mut rng).unwrap());
        let forest = RpForest::build(ds.clone(), leaf, 8, seed).unwrap();
        let exact: Vec<_> = pts[n..].iter().map(|q| brute_force_knn(&ds, q, 1).unwrap()[0]).collect();
        let mut prev = 0.0;
        for t in 1..=8 {
            let f = forest.prefix(t).unwrap();
            for q in &pts[n..] {
                let smaller = forest.prefix((t - 1).max(1)).unwrap().candidates(q);
                let larger = f.candidates(q);
                prop_assert!(smaller.iter().all(|i| larger.binary_search(i).is_ok()));
            }
            let answers: Vec<_> = pts[n..].iter().map(|q| f.query(q, 1).unwrap()).collect();
            let r = recall_at_1(&answers, &exact);
            prop_assert!(r >= prev);
            prev = r;
        }
    }
}

#[test]
fn forest_recall_on_manifold() {
    let (ds, queries) = manifold(1000, 5);
    let forest = RpForest::build(ds.clone(), 10, 10, 5).unwrap();
    let exact: Vec<_> = queries.iter().map(|q| brute_force_knn(&ds, q, 1).unwrap()[0]).collect();
    let answers: Vec<_> = queries.iter().map(|q| forest.query(q, 1).unwrap()).collect();
    let r = recall_at_1(&answers, &exact);
    assert!(r >= 0.9, "recall {r}");
}

/// One-sided p-value of a positive Spearman correlation via the t
/// approximation.
fn spearman_p_value(rho: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
}

#[test]
fn defeatist_failure_tracks_potential() {
    let (ds, queries) = manifold(1000, 8);
    let mut phis = Vec::new();
    let mut failures = Vec::new();
    for (i, q) in queries.iter().enumerate() {
        let exact = brute_force_knn(&ds, q, 1).unwrap()[0].index;
        let phi = potential_phi(&ds, q).unwrap();
        let trees = 20;
        let missed = (0..trees)
            .filter(|&t| {
                let tree = build_rp_tree(ds.clone(), 10, &mut derive_rng(8, "phi", (i * trees + t) as u64)).unwrap();
                tree.defeatist_query(q, 1).unwrap()[0].index != exact
            })
            .count();
        phis.push(phi);
        failures.push(missed as f64 / trees as f64);
    }
    let rho = neighborly::stats::spearman(&phis, &failures).unwrap();
    let p = spearman_p_value(rho, phis.len());
    assert!(rho > 0.0 && p < 0.05, "rho {rho} p {p}");
}
