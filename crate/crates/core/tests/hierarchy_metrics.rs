mod common;

use std::collections::BTreeSet;

use hierclass::metrics::{evaluate, path_set};
use hierclass::{build_hierarchy, LabelMatrix, DEFAULT_SEPARATOR};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn labels_strategy() -> impl Strategy<Value = LabelMatrix> {
    (any::<u64>(), 1usize..12, 1usize..5, 1usize..5).prop_map(|(seed, n, levels, per_level)| {
        common::random_labels(&mut common::rng(seed), n, levels, per_level, 0.4)
    })
}

fn pair_strategy() -> impl Strategy<Value = (LabelMatrix, LabelMatrix)> {
    (any::<u64>(), 1usize..10, 1usize..5, 1usize..6).prop_map(|(seed, n, levels, per_level)| {
        let mut rng = common::rng(seed);
        let truth = common::random_labels(&mut rng, n, levels, per_level, 0.4);
        let pred = common::random_labels(&mut rng, n, levels, per_level, 0.4);
        (truth, pred)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nodes_are_exactly_the_prefixes(y in labels_strategy()) {
        let h = build_hierarchy(&y).unwrap();
        let prefixes: BTreeSet<Vec<String>> = y.rows().iter().flat_map(|r| common::materialize(r)).collect();
        let nodes: BTreeSet<Vec<String>> = h.nodes().iter().map(|n| n.path().to_vec()).collect();
        prop_assert_eq!(prefixes, nodes);
        prop_assert!(h.validate().is_ok());
        for (k, level) in h.levels().iter().enumerate() {
            prop_assert!(level.iter().all(|n| n.depth() == k + 1));
        }
    }

    #[test]
    fn ancestors_are_proper_prefixes(y in labels_strategy()) {
        let h = build_hierarchy(&y).unwrap();
        for n in h.nodes() {
            let anc = h.ancestors(n).unwrap();
            prop_assert_eq!(anc.len(), n.depth() - 1);
            for (d, a) in anc.iter().enumerate() {
                prop_assert_eq!(a.path(), &n.path()[..d + 1]);
            }
            for c in h.children(n).unwrap() {
                prop_assert!(h.ancestors(c).unwrap().contains(&n));
            }
        }
    }

    #[test]
    fn row_order_does_not_matter(y in labels_strategy(), seed in any::<u64>()) {
        let mut rows = y.rows().to_vec();
        rows.shuffle(&mut common::rng(seed));
        let shuffled = LabelMatrix::with_levels(rows, y.n_levels()).unwrap();
        let a = build_hierarchy(&y).unwrap();
        let b = build_hierarchy(&shuffled).unwrap();
        prop_assert_eq!(a.nodes(), b.nodes());
        prop_assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn metrics_match_set_materialization((truth, pred) in pair_strategy()) {
        let r = evaluate(&truth, &pred).unwrap();
        let (inter, alpha, beta) = common::brute_force_totals(&truth, &pred);
        prop_assert_eq!((r.intersection_total, r.alpha_total, r.beta_total), (inter, alpha, beta));

        // path_set agrees with the explicit prefix sets
        for i in 0..truth.n_samples() {
            let s = path_set(truth.row(i), DEFAULT_SEPARATOR).unwrap();
            let paths: BTreeSet<Vec<String>> = s.iter().map(|n| n.path().to_vec()).collect();
            prop_assert_eq!(paths, common::materialize(truth.row(i)));
        }
    }

    #[test]
    fn swapping_exchanges_precision_and_recall((truth, pred) in pair_strategy()) {
        let a = evaluate(&truth, &pred).unwrap();
        let b = evaluate(&pred, &truth).unwrap();
        prop_assert_eq!(a.h_precision, b.h_recall);
        prop_assert_eq!(a.h_recall, b.h_precision);
        prop_assert!((a.h_fscore - b.h_fscore).abs() < 1e-15);
        for v in [a.h_precision, a.h_recall, a.h_fscore] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn perfect_score_iff_all_sets_equal((truth, pred) in pair_strategy()) {
        let r = evaluate(&truth, &pred).unwrap();
        let equal = (0..truth.n_samples()).all(|i| common::materialize(truth.row(i)) == common::materialize(pred.row(i)));
        prop_assert_eq!(r.h_fscore == 1.0, equal);
        prop_assert_eq!(evaluate(&truth, &truth).unwrap().h_fscore, 1.0);
    }

    #[test]
    fn depth_one_reduces_to_accuracy((truth, pred) in (any::<u64>(), 1usize..20, 1usize..5).prop_map(|(seed, n, k)| {
        let mut rng = common::rng(seed);
        (common::random_labels(&mut rng, n, 1, k, 0.0), common::random_labels(&mut rng, n, 1, k, 0.0))
    })) {
        let r = evaluate(&truth, &pred).unwrap();
        let hits = (0..truth.n_samples()).filter(|&i| truth.row(i) == pred.row(i)).count();
        let acc = hits as f64 / truth.n_samples() as f64;
        prop_assert_eq!(r.h_precision, acc);
        prop_assert_eq!(r.h_recall, acc);
        prop_assert!((r.h_fscore - acc).abs() < 1e-15);
    }

    #[test]
    fn extending_a_correct_path_never_lowers_numerators(y in labels_strategy(), cut in 0usize..4) {
        // predictions: the true path truncated; then one level deeper, still correct
        let truncate = |d: usize| {
            let rows = y.rows().iter().map(|r| {
                let depth = r.iter().position(String::is_empty).unwrap_or(r.len());
                let keep = depth.saturating_sub(cut + 1).max(if d > 0 { 1 } else { 0 }).min(depth);
                let keep = (keep + d).min(depth);
                r.iter().enumerate().map(|(j, l)| if j < keep { l.clone() } else { String::new() }).collect()
            }).collect();
            LabelMatrix::with_levels(rows, y.n_levels()).unwrap()
        };
        let shallow = evaluate(&y, &truncate(0)).unwrap();
        let deeper = evaluate(&y, &truncate(1)).unwrap();
        prop_assert!(deeper.intersection_total >= shallow.intersection_total);
        prop_assert!(deeper.h_recall >= shallow.h_recall);
        if shallow.alpha_total > 0 {
            prop_assert_eq!(deeper.h_precision, 1.0);
        }
    }
}
