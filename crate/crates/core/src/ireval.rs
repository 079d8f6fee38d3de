//! Ground-truth effectiveness (nDCG@k) and the true ranking of models.

use std::collections::HashMap;

use crate::corpusio::{EffectivenessTable, ModelRegistry, Qrels, RankedList};
use crate::selectors::{rank_by_goodness, ModelRanking, Provenance};
use crate::{Error, Result};

/// nDCG@k with linear gain and `log2(rank + 1)` discount.
///
/// Returns `None` when the query has no document with a positive grade,
/// since the ideal DCG is then zero and the value is undefined.
pub fn ndcg_at_k(run: &RankedList, qrels: &Qrels, k: usize) -> Option<f64> {
    let judged = qrels.judgments(run.query_id())?;
    let idcg = ideal_dcg(judged.values().copied(), k);
    if idcg == 0.0 {
        return None;
    }
    let dcg: f64 = run
        .items()
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, (doc, _))| discounted(qrels.grade(run.query_id(), doc), i))
        .sum();
    Some(dcg / idcg)
}

fn discounted(grade: u32, index: usize) -> f64 {
    f64::from(grade) / ((index + 2) as f64).log2()
}

fn ideal_dcg(grades: impl Iterator<Item = u32>, k: usize) -> f64 {
    let mut grades: Vec<u32> = grades.filter(|g| *g > 0).collect();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    grades.iter().take(k).enumerate().map(|(i, g)| discounted(*g, i)).sum()
}

/// Dataset-level nDCG.
#[derive(Debug, Clone, PartialEq)]
pub struct NdcgReport {
    pub mean: f64,
    /// Per-query values for every query with relevant judgments, sorted by id.
    pub per_query: Vec<(String, f64)>,
    /// Run queries that have no relevant judgments and were left out.
    pub skipped: Vec<String>,
}

/// Mean nDCG@k over the queries that have at least one relevant judgment.
/// A judged query without a run scores 0.
pub fn evaluate_runs(runs: &[RankedList], qrels: &Qrels, k: usize) -> Result<NdcgReport> {
    let by_query: HashMap<&str, &RankedList> = runs.iter().map(|r| (r.query_id(), r)).collect();
    let mut per_query = Vec::new();
    for qid in qrels.queries() {
        let has_relevant = qrels
            .judgments(qid)
            .is_some_and(|j| j.values().any(|g| *g > 0));
        if !has_relevant {
            continue;
        }
        let value = match by_query.get(qid) {
            Some(run) => ndcg_at_k(run, qrels, k).unwrap_or(0.0),
            None => 0.0,
        };
        per_query.push((qid.to_owned(), value));
    }
    if per_query.is_empty() {
        return Err(Error::Missing("queries with relevant judgments".into()));
    }
    let mut skipped: Vec<String> = runs
        .iter()
        .map(|r| r.query_id())
        .filter(|q| per_query.binary_search_by(|(p, _)| p.as_str().cmp(q)).is_err())
        .map(str::to_owned)
        .collect();
    skipped.sort();
    let mean = per_query.iter().map(|(_, v)| v).sum::<f64>() / per_query.len() as f64;
    Ok(NdcgReport {
        mean,
        per_query,
        skipped,
    })
}

/// Models in decreasing effectiveness on `dataset`, ties in registry order.
pub fn truth_ranking(
    effectiveness: &EffectivenessTable,
    dataset: &str,
    registry: &ModelRegistry,
) -> Result<ModelRanking> {
    let scores = registry
        .iter()
        .map(|m| Ok((m.model_id.clone(), effectiveness.require(&m.model_id, dataset)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelRanking {
        dataset: dataset.to_owned(),
        entries: rank_by_goodness(scores, registry),
        provenance: Provenance::GroundTruth,
    })
}
