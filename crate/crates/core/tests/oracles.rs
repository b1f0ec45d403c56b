mod common;

use common::{brute_auc, brute_ks, dfs_instances, random_bcn};
use hidam::graph::{enumerate_path_instances, resolve_all, MetaPathSpec, NodeRef};
use hidam::numerics::rng_from;
use hidam::train::{auc, ks};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn uncapped_enumeration_matches_exhaustive_dfs() {
    let mut total = [0usize; 6];
    for seed in 0..100 {
        let g = random_bcn(seed, 50);
        assert!(g.node_count() <= 50);
        let paths = resolve_all(&MetaPathSpec::catalog(), g.schema()).unwrap();
        for (k, mp) in paths.iter().enumerate() {
            for u in 0..g.company_count() as u32 {
                let mut got: Vec<_> = enumerate_path_instances(&g, NodeRef { ty: 0, idx: u }, mp, None, 0)
                    .unwrap()
                    .into_iter()
                    .map(|p| (p.links, p.nodes, p.terminal))
                    .collect();
                let mut want = dfs_instances(&g, mp, u);
                got.sort();
                want.sort();
                total[k] += want.len();
                assert_eq!(got, want, "graph {seed}, {} from c{u}", mp.name());
            }
        }
    }
    assert!(total.iter().all(|&t| t > 100), "too few instances to be meaningful: {total:?}");
}

#[test]
fn capped_enumeration_is_a_sub_multiset() {
    for seed in 0..20 {
        let g = random_bcn(seed, 40);
        let paths = resolve_all(&MetaPathSpec::catalog(), g.schema()).unwrap();
        for mp in &paths {
            for u in 0..g.company_count() as u32 {
                let all = dfs_instances(&g, mp, u);
                let capped = enumerate_path_instances(&g, NodeRef { ty: 0, idx: u }, mp, Some(3), seed).unwrap();
                assert_eq!(capped.len(), all.len().min(3));
                let mut pool = all.clone();
                for p in capped {
                    let key = (p.links, p.nodes, p.terminal);
                    let at = pool.iter().position(|x| *x == key).expect("sampled instance exists");
                    pool.swap_remove(at);
                }
            }
        }
    }
}

#[test]
fn metrics_match_brute_force_on_small_sets() {
    let mut rng = rng_from(42);
    let mut checked = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        // Few distinct values so that ties are common.
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64 / 4.0).collect();
        let labels: Vec<f64> = (0..n).map(|_| rng.random_range(0..2) as f64).collect();
        match (brute_auc(&scores, &labels), auc(&scores, &labels)) {
            (Some(want), Ok(got)) => {
                assert!((want - got).abs() <= 1e-12, "{scores:?} {labels:?}");
                checked += 1;
            }
            (None, Err(_)) => {}
            other => panic!("definedness differs: {other:?}"),
        }
        match (brute_ks(&scores, &labels), ks(&scores, &labels)) {
            (Some(want), Ok(got)) => assert!((want - got).abs() <= 1e-12, "{scores:?} {labels:?}"),
            (None, Err(_)) => {}
            other => panic!("definedness differs: {other:?}"),
        }
    }
    assert!(checked > 500);
}

proptest! {
    #[test]
    fn auc_flips_under_score_negation(
        data in prop::collection::vec((-5.0f64..5.0, prop::bool::ANY), 2..40)
    ) {
        let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
        let labels: Vec<f64> = data.iter().map(|d| d.1 as u8 as f64).collect();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        if let (Ok(a), Ok(b)) = (auc(&scores, &labels), auc(&neg, &labels)) {
            prop_assert!((a + b - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
            let k = ks(&scores, &labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&k));
        }
    }

    #[test]
    fn metrics_are_invariant_under_monotone_transforms(
        data in prop::collection::vec((-5.0f64..5.0, prop::bool::ANY), 2..40)
    ) {
        let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
        let labels: Vec<f64> = data.iter().map(|d| d.1 as u8 as f64).collect();
        let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp())).collect();
        if let Ok(a) = auc(&scores, &labels) {
            prop_assert!((a - auc(&squashed, &labels).unwrap()).abs() < 1e-12);
            prop_assert!((ks(&scores, &labels).unwrap() - ks(&squashed, &labels).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn neighbors_are_the_terminals_of_instances(seed in 0u64..500) {
        let g = random_bcn(seed, 30);
        let paths = resolve_all(&MetaPathSpec::catalog(), g.schema()).unwrap();
        for mp in &paths {
            let u = NodeRef { ty: 0, idx: 0 };
            let n = hidam::graph::metapath_neighbors(&g, u, mp).unwrap();
            let t: std::collections::BTreeSet<u32> = enumerate_path_instances(&g, u, mp, None, 0)
                .unwrap().into_iter().map(|p| p.terminal).collect();
            prop_assert_eq!(&n, &t);
            prop_assert!(!n.contains(&0));
            prop_assert_eq!(hidam::graph::count_instances(&g, u, mp).unwrap(), dfs_instances(&g, mp, 0).len());
        }
    }
}
