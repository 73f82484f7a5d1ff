use std::sync::Arc;

use neighborly::exact::{brute_force_knn, fixed_radius_search, KdTree, QueryMode, SplitRule};
use neighborly::seed::rng_from;
use neighborly::synth::uniform_points;
use neighborly::{LabeledDataset, RealVector};
use proptest::prelude::*;

fn dataset(n: usize, d: usize, seed: u64) -> Arc<LabeledDataset<RealVector>> {
    let mut rng = rng_from(seed);
    let pts = uniform_points(n, d, &mut rng).unwrap();
    Arc::new(LabeledDataset::new(pts, None, &mut rng).unwrap())
}

fn grid_dataset(n: usize, d: usize, seed: u64) -> Arc<LabeledDataset<RealVector>> {
    // Coarse coordinates force many distance ties and duplicate points.
    let mut rng = rng_from(seed);
    let pts = uniform_points(n, d, &mut rng)
        .unwrap()
        .into_iter()
        .map(|p| RealVector::new(p.as_slice().iter().map(|x| (x * 4.0).floor()).collect()).unwrap())
        .collect();
    Arc::new(LabeledDataset::new(pts, None, &mut rng).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_mode_matches_brute_force(
        n in 1usize..400, d in 1usize..7, leaf in 1usize..20, k in 1usize..25,
        seed: u64, grid: bool, spread: bool,
    ) {
        let ds = if grid { grid_dataset(n, d, seed) } else { dataset(n, d, seed) };
        let k = k.min(n);
        let rule = if spread { SplitRule::MaxSpread } else { SplitRule::Rotate };
        let tree = KdTree::build(ds.clone(), leaf, rule).unwrap();
        prop_assert!(tree.check_invariants());
        let mut rng = rng_from(seed ^ 1);
        for q in uniform_points(5, d, &mut rng).unwrap() {
            let exact = tree.knn(&q, k, QueryMode::Exact).unwrap();
            prop_assert_eq!(&exact, &brute_force_knn(&ds, &q, k).unwrap());
            let defeatist = tree.knn(&q, k, QueryMode::Defeatist).unwrap();
            prop_assert!(defeatist.len() <= exact.len());
            for (a, b) in defeatist.iter().zip(&exact) {
                prop_assert!(a.distance >= b.distance);
            }
        }
    }

    #[test]
    fn rebuild_is_identical(n in 1usize..300, d in 1usize..5, leaf in 1usize..10, seed: u64) {
        let ds = dataset(n, d, seed);
        let a = KdTree::build(ds.clone(), leaf, SplitRule::Rotate).unwrap();
        let b = KdTree::build(ds_clone(&ds), leaf, SplitRule::Rotate).unwrap();
        prop_assert!(a.same_shape(&b));
    }
}

fn ds_clone(ds: &Arc<LabeledDataset<RealVector>>) -> LabeledDataset<RealVector> {
    (**ds).clone()
}

#[test]
fn exact_search_prunes_work() {
    let ds = dataset(2000, 2, 9);
    let tree = KdTree::build(ds.clone(), 8, SplitRule::Rotate).unwrap();
    let q = RealVector::new(vec![0.3, 0.6]).unwrap();
    let (_, stats) = tree.knn_with_stats(&q, 1, QueryMode::Exact).unwrap();
    assert!(stats.distance_evals < 200, "{stats:?}");
}

#[test]
fn fixed_radius_matches_filter() {
    let ds = dataset(500, 3, 4);
    let q = RealVector::new(vec![0.5, 0.5, 0.5]).unwrap();
    let hits = fixed_radius_search(&ds, &q, 0.2).unwrap();
    let all = brute_force_knn(&ds, &q, ds.len()).unwrap();
    let expected: Vec<_> = all.into_iter().filter(|h| h.distance <= 0.2).collect();
    assert_eq!(hits.len(), expected.len());
    assert!(hits.iter().all(|h| h.distance <= 0.2));
}
