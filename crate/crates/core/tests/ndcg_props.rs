use drselect_core::corpusio::{Qrels, RankedList};
use drselect_core::ireval::{evaluate_runs, ndcg_at_k};
use drselect_core::retrieval::SimilarityKind;
use proptest::prelude::*;

fn run(docs: &[String]) -> RankedList {
    let items = docs.iter().enumerate().map(|(i, d)| (d.clone(), -(i as f64))).collect();
    RankedList::new("q", items, SimilarityKind::Dot).unwrap()
}

fn qrels(grades: &[u32]) -> Qrels {
    Qrels::from_entries(grades.iter().enumerate().map(|(i, g)| ("q".to_string(), format!("d{i}"), *g))).unwrap()
}

proptest! {
    #[test]
    fn bounded_and_ideal_is_one(grades in proptest::collection::vec(0u32..4, 1..30), order_seed in any::<u64>(), k in 1usize..15) {
        prop_assume!(grades.iter().any(|g| *g > 0));
        let qrels = qrels(&grades);
        let mut ideal: Vec<usize> = (0..grades.len()).collect();
        ideal.sort_by(|a, b| grades[*b].cmp(&grades[*a]));
        let ideal_ids: Vec<String> = ideal.iter().map(|i| format!("d{i}")).collect();
        prop_assert!((ndcg_at_k(&run(&ideal_ids), &qrels, k).unwrap() - 1.0).abs() < 1e-12);

        let mut shuffled = ideal_ids.clone();
        let n = shuffled.len();
        shuffled.rotate_left((order_seed % n as u64) as usize);
        let v = ndcg_at_k(&run(&shuffled), &qrels, k).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn irrelevant_only_is_zero(grades in proptest::collection::vec(0u32..4, 1..10), extra in 1usize..10) {
        prop_assume!(grades.iter().any(|g| *g > 0));
        let ids: Vec<String> = (0..extra).map(|i| format!("x{i}")).collect();
        prop_assert_eq!(ndcg_at_k(&run(&ids), &qrels(&grades), 10), Some(0.0));
    }
}

#[test]
fn unjudged_queries_are_skipped() {
    let q = qrels(&[0, 0]);
    assert_eq!(ndcg_at_k(&run(&["d0".into()]), &q, 10), None);
    let report = evaluate_runs(&[run(&["d0".into()])], &qrels(&[1]), 10).unwrap();
    assert_eq!(report.mean, 1.0);
}
