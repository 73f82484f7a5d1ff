use std::collections::HashSet;

use neighborly::recsim::{
    collaborative_greedy_step, cosine_sep_check, gen_cf_model, simulate, DistanceVariant, LatentCfModel, Policy,
    SimState, StepKind,
};
use neighborly::seed::{derive_rng, rng_from};

fn cg(h: f64, distance: DistanceVariant) -> Policy {
    Policy::CollaborativeGreedy { h, alpha: 0.5, distance }
}

#[test]
fn no_item_is_recommended_twice() {
    let policies = [
        cg(0.8, DistanceVariant::JointCosine),
        cg(0.8, DistanceVariant::Cosine),
        Policy::RandomOnly,
        Policy::PopularityAmongNeighbors { h: 0.8 },
        Policy::Oracle,
    ];
    for (p, policy) in policies.iter().enumerate() {
        for seed in 0..3 {
            let mut rng = derive_rng(seed, "repeat", p as u64);
            let model = gen_cf_model(3, 40, 0.2, 0.3, &mut rng).unwrap();
            let out = simulate(&model, 15, 40, policy, &mut rng).unwrap();
            let mut seen = HashSet::new();
            for r in &out.log {
                assert!(seen.insert((r.user, r.item)), "{policy:?} repeated {r:?}");
            }
            assert_eq!(seen.len(), 15 * 40);
        }
    }
}

#[test]
fn exploration_schedule_from_logs() {
    let model = gen_cf_model(2, 100, 0.1, 0.3, &mut rng_from(1)).unwrap();
    let out = simulate(&model, 25, 100, &cg(0.9, DistanceVariant::JointCosine), &mut rng_from(2)).unwrap();
    assert!(out.steps.windows(2).all(|w| w[1].eps_joint <= w[0].eps_joint));
    let unclipped: Vec<f64> = out.steps.iter().filter(|s| s.eps_joint + 0.2 < 1.0).map(|s| s.eps_random).collect();
    assert!(unclipped.iter().all(|&e| e == 0.2));
    assert_eq!(out.steps[0].kind, StepKind::JointExploration);
}

#[test]
fn jointly_explored_set_is_the_order_prefix() {
    let model = gen_cf_model(3, 60, 0.1, 0.3, &mut rng_from(3)).unwrap();
    let out = simulate(&model, 20, 60, &cg(0.9, DistanceVariant::JointCosine), &mut rng_from(4)).unwrap();
    let joint = out.steps.iter().filter(|s| s.kind == StepKind::JointExploration).count();
    let explored: HashSet<usize> = out.state.jointly_explored().iter().copied().collect();
    let prefix: HashSet<usize> = out.state.item_order()[..joint].iter().copied().collect();
    assert_eq!(explored, prefix);
    for u in 0..20 {
        assert!(prefix.iter().all(|&i| out.state.ratings(u).is_rated(i)));
    }
}

#[test]
fn random_only_matches_likable_supply() {
    let mut total = 0.0;
    for seed in 0..10 {
        let mut rng = derive_rng(seed, "random-only", 0);
        let model = gen_cf_model(4, 300, 0.1, 0.3, &mut rng).unwrap();
        let out = simulate(&model, 40, 150, &Policy::RandomOnly, &mut rng).unwrap();
        total += *out.likable_fraction().last().unwrap();
    }
    let mean = total / 10.0;
    assert!((mean - 0.3).abs() <= 0.03, "{mean}");
}

#[test]
fn oracle_takes_one_likable_item_per_step_while_supply_lasts() {
    let model = gen_cf_model(3, 50, 0.2, 0.3, &mut rng_from(5)).unwrap();
    let out = simulate(&model, 12, 50, &Policy::Oracle, &mut rng_from(6)).unwrap();
    let mut prev = 0;
    for (t, &c) in out.cumulative_likable.iter().enumerate() {
        let expected = out.clusters.iter().filter(|&&g| model.likable_count(g) > t).count() as u64;
        assert_eq!(c - prev, expected, "step {}", t + 1);
        prev = c;
    }
}

#[test]
fn identified_clusters_get_likable_items() {
    let mu = vec![
        vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0],
    ];
    let model = LatentCfModel::new(mu, 0.0).unwrap();
    let policy = cg(0.5, DistanceVariant::Cosine);
    let mut checked = 0;
    for seed in 0..20 {
        let mut rng = derive_rng(seed, "tiny-cf", 0);
        let clusters = model.assign_users(20, &mut rng);
        let mut state = SimState::new(20, 10, &mut rng);
        for _ in 0..10 {
            let before = state.clone();
            let (step, recs) = collaborative_greedy_step(&mut state, &model, &clusters, &policy, &mut rng).unwrap();
            if step.kind != StepKind::Exploitation {
                continue;
            }
            for r in recs {
                let g = clusters[r.user];
                let neighbors: Vec<usize> = (0..20)
                    .filter(|&v| v != r.user && before.distance(r.user, v, DistanceVariant::Cosine).is_some_and(|d| d <= 0.5))
                    .collect();
                let own: Vec<usize> = (0..20).filter(|&v| v != r.user && clusters[v] == g).collect();
                let hint = neighbors
                    .iter()
                    .any(|&v| before.consumed(v).iter().any(|&(i, y)| y > 0 && !before.ratings(r.user).is_rated(i)));
                if neighbors == own && hint {
                    checked += 1;
                    assert!(r.likable, "seed {seed}: {r:?}");
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn separation_condition_examples() {
    let m = 500;
    let r = 4;
    let slack = ((m as f64).ln() / m as f64).sqrt();
    let mut unbiased_misses = 0;
    let mut biased_misses = 0;
    let seeds = 200;
    for seed in 0..seeds {
        let half = gen_cf_model(r, m, 0.0, 0.5, &mut derive_rng(seed, "example2", 0)).unwrap();
        unbiased_misses += (!cosine_sep_check(&half, 1.0 - slack).unwrap()) as usize;
        let zeta = 0.25;
        let quarter = gen_cf_model(r, m, 0.125, zeta, &mut derive_rng(seed, "example3", 0)).unwrap();
        let predicted = 1.0 - (1.0 - 2.0 * zeta).powi(2) - slack;
        biased_misses += (quarter.measured_separation().unwrap() < predicted) as usize;
    }
    let allowed = 2.0 * (r * r) as f64 / m as f64 * seeds as f64;
    assert!((unbiased_misses as f64) <= allowed, "{unbiased_misses}");
    assert!((biased_misses as f64) <= allowed, "{biased_misses}");
}
