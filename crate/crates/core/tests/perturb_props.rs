use drselect_core::corpusio::Query;
use drselect_core::perturb::{mask_query, perturb_queries, split_perturbed_id, PerturbConfig};
use proptest::prelude::*;

fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
}

proptest! {
    #[test]
    fn mask_count_is_floor_with_minimum_one(percent in 0u32..=100, n in 1usize..200) {
        let cfg = PerturbConfig::new(f64::from(percent) / 100.0, 1, 1).unwrap();
        // integer arithmetic avoids any float rounding in the expectation
        let expected = if percent == 0 { 0 } else { ((percent as usize * n) / 100).max(1) };
        prop_assert_eq!(cfg.mask_count(n), expected);
    }

    #[test]
    fn masks_exactly_that_many_tokens(percent in 0u32..=100, n in 1usize..60, seed in any::<u64>(), trial in 0usize..5) {
        let cfg = PerturbConfig::new(f64::from(percent) / 100.0, seed, 1).unwrap();
        let text = words(n);
        let masked = mask_query(&text, &cfg, "q1", trial).unwrap();
        let tokens: Vec<&str> = masked.split(' ').collect();
        prop_assert_eq!(tokens.len(), n);
        prop_assert_eq!(tokens.iter().filter(|t| **t == "[MASK]").count(), cfg.mask_count(n));
        for (i, t) in tokens.iter().enumerate() {
            let original = format!("w{}", i);
            prop_assert!(*t == "[MASK]" || *t == original);
        }
        prop_assert_eq!(masked, mask_query(&text, &cfg, "q1", trial).unwrap());
    }

    #[test]
    fn perturbed_set_layout(nq in 1usize..10, trials in 1usize..5, seed in any::<u64>()) {
        let queries: Vec<Query> = (0..nq).map(|i| Query { id: format!("q{i}"), text: words(3 + i) }).collect();
        let cfg = PerturbConfig::new(0.3, seed, trials).unwrap();
        let out = perturb_queries(&queries, &cfg).unwrap();
        prop_assert_eq!(out.len(), nq * trials);
        for (i, q) in out.iter().enumerate() {
            let (qid, t) = split_perturbed_id(&q.id).unwrap();
            prop_assert_eq!(qid, format!("q{}", i / trials));
            prop_assert_eq!(t, i % trials);
        }
        prop_assert_eq!(out, perturb_queries(&queries, &cfg).unwrap());
    }
}

#[test]
fn zero_proportion_leaves_text_alone() {
    let cfg = PerturbConfig::new(0.0, 3, 2).unwrap();
    assert_eq!(mask_query("a b c", &cfg, "q", 0).unwrap(), "a b c");
}

#[test]
fn rejects_bad_settings() {
    assert!(PerturbConfig::new(1.5, 0, 1).is_err());
    assert!(PerturbConfig::new(0.1, 0, 0).is_err());
    let q = [Query { id: "a#t0".into(), text: "x".into() }];
    assert!(perturb_queries(&q, &PerturbConfig::new(0.1, 0, 1).unwrap()).is_err());
}
