use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde_json::{Map, Value};

use super::{MethodScoreTable, QueryScoreDetail};
use crate::corpusio::{EffectivenessTable, EmbeddingMatrix, ModelRegistry, RankedList};
use crate::gaussdist::{frechet_distance, summarize};
use crate::perturb::split_perturbed_id;
use crate::retrieval::{norm, similarity, NegativeSample, Retriever, SimilarityKind};
use crate::{Error, Result};

/// Rank probabilities are clamped to `[PROBABILITY_FLOOR, 1 - PROBABILITY_FLOOR]`.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// In-domain effectiveness of every registry model on `source_dataset`.
pub fn select_indomain(
    effectiveness: &EffectivenessTable,
    source_dataset: &str,
    registry: &ModelRegistry,
) -> Result<MethodScoreTable> {
    let mut params = Map::new();
    params.insert("source_dataset".into(), Value::from(source_dataset));
    params.insert("metric".into(), Value::from(effectiveness.metric().to_string()));
    let mut table = MethodScoreTable::new("indomain", source_dataset, params)?;
    for id in registry.ids() {
        table.insert(id, effectiveness.require(id, source_dataset)?)?;
    }
    Ok(table)
}

fn check_same_dim(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

fn unit_rows(m: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
    m.rows()
        .enumerate()
        .map(|(i, row)| {
            let n = norm(row);
            if n == 0.0 {
                return Err(Error::Numeric(format!("zero-norm query {}", m.id(i))));
            }
            Ok(row.iter().map(|v| f64::from(*v) / n).collect())
        })
        .collect()
}

/// Mean over target queries of the best cosine similarity to any source
/// query. Always cosine, whatever the model retrieves with.
pub fn query_similarity_score(
    src_q: &EmbeddingMatrix,
    tgt_q: &EmbeddingMatrix,
) -> Result<(f64, QueryScoreDetail)> {
    check_same_dim(src_q, tgt_q)?;
    if src_q.is_empty() || tgt_q.is_empty() {
        return Err(Error::invalid("query similarity needs non-empty query sets"));
    }
    let src = unit_rows(src_q)?;
    let tgt = unit_rows(tgt_q)?;
    let per_query: Vec<(String, f64)> = tgt
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let best = src
                .iter()
                .map(|s| s.iter().zip(t).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            (tgt_q.id(i).to_owned(), best.clamp(-1.0, 1.0))
        })
        .collect();
    let mean = per_query.iter().map(|(_, v)| v).sum::<f64>() / per_query.len() as f64;
    Ok((mean, QueryScoreDetail::single(per_query)))
}

/// Fréchet distance between the source and target document embeddings.
pub fn corpus_fd_score(src_docs: &EmbeddingMatrix, tgt_docs: &EmbeddingMatrix) -> Result<f64> {
    check_same_dim(src_docs, tgt_docs)?;
    frechet_distance(&summarize(src_docs.rows())?, &summarize(tgt_docs.rows())?)
}

/// Mean over target queries of the Fréchet distance between the top-k
/// documents retrieved from the source corpus and from the target corpus.
///
/// Each side retrieves `min(k, corpus size)` documents with the model's own
/// similarity.
pub fn extracted_fd_score(
    kind: SimilarityKind,
    tgt_queries: &EmbeddingMatrix,
    src_docs: &EmbeddingMatrix,
    tgt_docs: &EmbeddingMatrix,
    k: usize,
) -> Result<(f64, QueryScoreDetail)> {
    if k < 2 {
        return Err(Error::invalid("extracted-document k must be at least 2"));
    }
    if tgt_queries.is_empty() {
        return Err(Error::invalid("extracted-document FD needs at least one target query"));
    }
    check_same_dim(src_docs, tgt_docs)?;
    if src_docs.len() < 2 || tgt_docs.len() < 2 {
        return Err(Error::invalid("extracted-document FD needs corpora of at least 2 documents"));
    }
    let src = Retriever::new(src_docs, kind)?;
    let tgt = Retriever::new(tgt_docs, kind)?;
    let per_query: Vec<(String, f64)> = (0..tgt_queries.len())
        .into_par_iter()
        .map(|i| {
            let q = tgt_queries.row(i);
            let from_src = src.top_k_indices(q, k)?;
            let from_tgt = tgt.top_k_indices(q, k)?;
            let s = summarize(from_src.iter().map(|(j, _)| src_docs.row(*j)))?;
            let t = summarize(from_tgt.iter().map(|(j, _)| tgt_docs.row(*j)))?;
            Ok((tgt_queries.id(i).to_owned(), frechet_distance(&s, &t)?))
        })
        .collect::<Result<_>>()?;
    let mean = per_query.iter().map(|(_, v)| v).sum::<f64>() / per_query.len() as f64;
    Ok((mean, QueryScoreDetail::single(per_query)))
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Relevance probabilities `(s_i - min) / (s_1 - min)`, clamped away from 0
/// and 1. When the top score equals `min` every probability is the floor.
pub fn rank_probabilities(scores: &[f64], min_score: f64) -> Vec<f64> {
    let Some(&top) = scores.first() else {
        return Vec::new();
    };
    let span = top - min_score;
    scores
        .iter()
        .map(|s| {
            if span <= 0.0 {
                PROBABILITY_FLOOR
            } else {
                ((s - min_score) / span).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
            }
        })
        .collect()
}

/// Mean over queries of the summed binary entropy of the rank
/// probabilities of the first `cutoff` retrieved documents.
pub fn binary_entropy_score(
    runs: &[RankedList],
    negatives: &BTreeMap<String, NegativeSample>,
    cutoff: usize,
) -> Result<(f64, QueryScoreDetail)> {
    if cutoff == 0 {
        return Err(Error::invalid("entropy cutoff must be positive"));
    }
    if runs.is_empty() {
        return Err(Error::invalid("entropy needs at least one run"));
    }
    let per_query = runs
        .iter()
        .map(|run| {
            if run.is_empty() {
                return Err(Error::invalid(format!("empty run for query {}", run.query_id())));
            }
            let neg = negatives
                .get(run.query_id())
                .ok_or_else(|| Error::Missing(format!("negatives for query {}", run.query_id())))?;
            let scores: Vec<f64> = run.scores().take(cutoff).collect();
            let h: f64 = rank_probabilities(&scores, neg.min_score)
                .into_iter()
                .map(binary_entropy)
                .sum();
            Ok((run.query_id().to_owned(), h))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = per_query.iter().map(|(_, v)| v).sum::<f64>() / per_query.len() as f64;
    Ok((mean, QueryScoreDetail::single(per_query)))
}

/// Sample standard deviation (`n - 1`) of the score changes between each
/// perturbed query and its original, over the originally retrieved
/// documents, pooled across documents, trials and queries.
///
/// `perturbed_q` ids are `<query id>#t<trial>`; every original query needs
/// at least one trial. Runs are used as given; truncate them beforehand to
/// the desired depth.
pub fn query_alteration_score(
    original_runs: &[RankedList],
    original_q: &EmbeddingMatrix,
    perturbed_q: &EmbeddingMatrix,
    docs: &EmbeddingMatrix,
    kind: SimilarityKind,
) -> Result<(f64, QueryScoreDetail)> {
    check_same_dim(original_q, perturbed_q)?;
    check_same_dim(original_q, docs)?;
    let originals: HashSet<&str> = original_q.ids().iter().map(String::as_str).collect();
    let mut trials: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    for (row, id) in perturbed_q.ids().iter().enumerate() {
        let (qid, trial) = split_perturbed_id(id)
            .ok_or_else(|| Error::invalid(format!("perturbed id {id:?} lacks a #t<trial> suffix")))?;
        if !originals.contains(qid) {
            return Err(Error::invalid(format!("perturbed id {id:?} has no original query")));
        }
        trials.entry(qid).or_default().push((trial, row));
    }
    if let Some(q) = original_q.ids().iter().find(|q| !trials.contains_key(q.as_str())) {
        return Err(Error::invalid(format!("no perturbed trials for query {q}")));
    }
    let doc_rows: HashMap<&str, usize> = docs
        .ids()
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i))
        .collect();

    let mut per_query = Vec::with_capacity(original_runs.len());
    for run in original_runs {
        let rows = trials
            .get_mut(run.query_id())
            .ok_or_else(|| Error::invalid(format!("run query {} has no embeddings", run.query_id())))?;
        rows.sort_unstable();
        let mut deltas = Vec::with_capacity(rows.len() * run.len());
        for &(_, prow) in rows.iter() {
            for (doc, original) in run.items() {
                let drow = *doc_rows
                    .get(doc.as_str())
                    .ok_or_else(|| Error::invalid(format!("run document {doc} not in the corpus")))?;
                deltas.push(similarity(perturbed_q.row(prow), docs.row(drow), kind)? - original);
            }
        }
        per_query.push((run.query_id().to_owned(), deltas));
    }
    let pooled: Vec<f64> = per_query.iter().flat_map(|(_, d)| d.iter().copied()).collect();
    let std = sample_std(&pooled)?;
    Ok((std, QueryScoreDetail { entries: per_query }))
}

fn sample_std(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Numeric(format!(
            "standard deviation needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (n - 1.0)).sqrt())
}
