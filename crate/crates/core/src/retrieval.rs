//! Exact scoring and top-k retrieval by exhaustive scan.
//!
//! Scores are accumulated in `f64` from the `f32` embeddings. Ties in score
//! break by ascending document id, so every result is a pure function of the
//! inputs and independent of row order.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpusio::{EmbeddingMatrix, RankedList};
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Dot,
    Cosine,
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityKind::Dot => "dot",
            SimilarityKind::Cosine => "cosine",
        })
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(SimilarityKind::Dot),
            "cosine" | "cos" => Ok(SimilarityKind::Cosine),
            other => Err(Error::invalid(format!("unknown similarity {other:?}"))),
        }
    }
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

pub fn norm(a: &[f32]) -> f64 {
    a.iter().map(|x| f64::from(*x) * f64::from(*x)).sum::<f64>().sqrt()
}

fn check_dims(q: &[f32], d: &[f32]) -> Result<()> {
    if q.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: d.len(),
        });
    }
    Ok(())
}

fn nonzero_norm(v: &[f32]) -> Result<f64> {
    let n = norm(v);
    if n == 0.0 {
        return Err(Error::Numeric("zero vector under cosine similarity".into()));
    }
    Ok(n)
}

/// `dot(q, d)` or `dot(q, d) / (|q| |d|)`.
pub fn similarity(q: &[f32], d: &[f32], kind: SimilarityKind) -> Result<f64> {
    check_dims(q, d)?;
    match kind {
        SimilarityKind::Dot => Ok(dot(q, d)),
        SimilarityKind::Cosine => {
            let (nq, nd) = (nonzero_norm(q)?, nonzero_norm(d)?);
            Ok(dot(q, d) / (nq * nd))
        }
    }
}

/// Brute-force retriever over a fixed document matrix. Document norms are
/// computed once for cosine scoring.
pub struct Retriever<'a> {
    docs: &'a EmbeddingMatrix,
    kind: SimilarityKind,
    norms: Vec<f64>,
}

impl<'a> Retriever<'a> {
    pub fn new(docs: &'a EmbeddingMatrix, kind: SimilarityKind) -> Result<Self> {
        let norms = match kind {
            SimilarityKind::Dot => Vec::new(),
            SimilarityKind::Cosine => docs
                .rows()
                .enumerate()
                .map(|(i, row)| {
                    nonzero_norm(row).map_err(|_| {
                        Error::Numeric(format!("zero vector under cosine similarity (doc {})", docs.id(i)))
                    })
                })
                .collect::<Result<_>>()?,
        };
        Ok(Self { docs, kind, norms })
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    /// Scores of `query` against every document, in row order.
    pub fn score_all(&self, query: &[f32]) -> Result<Vec<f64>> {
        if query.len() != self.docs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.docs.dim(),
                got: query.len(),
            });
        }
        Ok(match self.kind {
            SimilarityKind::Dot => self.docs.rows().map(|d| dot(query, d)).collect(),
            SimilarityKind::Cosine => {
                let nq = nonzero_norm(query)?;
                self.docs
                    .rows()
                    .zip(&self.norms)
                    .map(|(d, nd)| dot(query, d) / (nq * nd))
                    .collect()
            }
        })
    }

    /// Row indices and scores of the `min(k, n)` best documents.
    pub fn top_k_indices(&self, query: &[f32], k: usize) -> Result<Vec<(usize, f64)>> {
        if k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        let docs = self.docs;
        let order = |a: &(usize, f64), b: &(usize, f64)| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| docs.id(a.0).cmp(docs.id(b.0)))
        };
        let mut scored: Vec<(usize, f64)> = self.score_all(query)?.into_iter().enumerate().collect();
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        Ok(scored)
    }

    /// The `min(k, n)` best documents for `query`.
    pub fn top_k(&self, query_id: &str, query: &[f32], k: usize) -> Result<RankedList> {
        let items = self
            .top_k_indices(query, k)?
            .into_iter()
            .map(|(i, s)| (self.docs.id(i).to_owned(), s))
            .collect();
        RankedList::new(query_id, items, self.kind)
    }

    /// Top-k for every row of `queries`, in row order. Queries are scanned
    /// in parallel; the output does not depend on scheduling.
    pub fn retrieve_all(&self, queries: &EmbeddingMatrix, k: usize) -> Result<Vec<RankedList>> {
        (0..queries.len())
            .into_par_iter()
            .map(|i| self.top_k(queries.id(i), queries.row(i), k))
            .collect()
    }
}

/// Top-k of one query against `docs`.
pub fn top_k(
    query_id: &str,
    query: &[f32],
    docs: &EmbeddingMatrix,
    kind: SimilarityKind,
    k: usize,
) -> Result<RankedList> {
    Retriever::new(docs, kind)?.top_k(query_id, query, k)
}

/// Documents outside a query's retrieved list, with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSample {
    pub query_id: String,
    pub doc_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub min_score: f64,
}

impl NegativeSample {
    pub fn new(query_id: impl Into<String>, doc_ids: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        let query_id = query_id.into();
        if doc_ids.is_empty() || doc_ids.len() != scores.len() {
            return Err(Error::invalid(format!(
                "query {query_id}: negatives need one score per id and at least one id"
            )));
        }
        let min_score = scores.iter().copied().fold(f64::INFINITY, f64::min);
        if !min_score.is_finite() {
            return Err(Error::invalid(format!("query {query_id}: non-finite negative score")));
        }
        Ok(Self {
            query_id,
            doc_ids,
            scores,
            min_score,
        })
    }
}

/// Sample up to `count` documents uniformly without replacement from
/// `corpus_ids` minus the ids in `top`, and score them with `scorer`.
///
/// The generator is derived from `(seed, query_id)`, so each query's sample
/// is reproducible on its own. When fewer than `count` candidates remain,
/// all of them are taken.
pub fn sample_negatives<F>(
    query_id: &str,
    top: &RankedList,
    corpus_ids: &[String],
    count: usize,
    seed: u64,
    mut scorer: F,
) -> Result<NegativeSample>
where
    F: FnMut(&str) -> Result<f64>,
{
    let retrieved: HashSet<&str> = top.items().iter().map(|(d, _)| d.as_str()).collect();
    let candidates: Vec<&String> = corpus_ids
        .iter()
        .filter(|id| !retrieved.contains(id.as_str()))
        .collect();
    if corpus_ids.len() - candidates.len() != retrieved.len() {
        return Err(Error::invalid(format!(
            "query {query_id}: retrieved documents missing from the corpus id list"
        )));
    }
    if candidates.is_empty() || count == 0 {
        return Err(Error::invalid(format!(
            "query {query_id}: no candidates left for negative sampling"
        )));
    }
    let chosen: Vec<&String> = if candidates.len() <= count {
        candidates
    } else {
        let mut rng = stream(seed, &["negatives", query_id]);
        let mut picks = index::sample(&mut rng, candidates.len(), count).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|i| candidates[i]).collect()
    };
    let scores = chosen.iter().map(|id| scorer(id)).collect::<Result<Vec<_>>>()?;
    NegativeSample::new(query_id, chosen.into_iter().cloned().collect(), scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(ids: &[&str], rows: &[&[f32]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(
            ids.iter().map(|s| s.to_string()).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(similarity(&[1.0, 0.0], &[1.0, 0.0], SimilarityKind::Cosine).unwrap(), 1.0);
        assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0], SimilarityKind::Dot).unwrap(), 0.0);
        assert_eq!(similarity(&[1.0, 2.0], &[3.0, 4.0], SimilarityKind::Dot).unwrap(), 11.0);
    }

    #[test]
    fn similarity_errors() {
        assert!(matches!(
            similarity(&[1.0], &[1.0, 2.0], SimilarityKind::Dot),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(similarity(&[0.0, 0.0], &[1.0, 2.0], SimilarityKind::Cosine)
            .unwrap_err()
            .is_numeric());
    }

    #[test]
    fn top_k_examples() {
        let docs = matrix(&["d1", "d2"], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = top_k("q", &[1.0, 0.0], &docs, SimilarityKind::Dot, 1).unwrap();
        assert_eq!(r.items(), [("d1".to_owned(), 1.0)]);
        let r = top_k("q", &[1.0, 0.0], &docs, SimilarityKind::Dot, 5).unwrap();
        assert_eq!(r.len(), 2);

        let docs = matrix(&["b", "a"], &[&[2.0, 0.0], &[1.0, 0.0]]);
        let r = top_k("q", &[1.0, 0.0], &docs, SimilarityKind::Cosine, 2).unwrap();
        assert_eq!(r.items(), [("a".to_owned(), 1.0), ("b".to_owned(), 1.0)]);
    }

    #[test]
    fn top_k_rejects_zero_k_and_bad_dims() {
        let docs = matrix(&["d1"], &[&[1.0, 0.0]]);
        assert!(top_k("q", &[1.0, 0.0], &docs, SimilarityKind::Dot, 0).is_err());
        assert!(top_k("q", &[1.0], &docs, SimilarityKind::Dot, 1).is_err());
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i:03}")).collect()
    }

    fn run_of(ids: &[String]) -> RankedList {
        let items = ids.iter().enumerate().map(|(i, d)| (d.clone(), -(i as f64))).collect();
        RankedList::new("q", items, SimilarityKind::Dot).unwrap()
    }

    #[test]
    fn negatives_are_disjoint_and_deterministic() {
        let corpus = ids(200);
        let top = run_of(&corpus[..10]);
        let a = sample_negatives("q", &top, &corpus, 100, 7, |_| Ok(0.0)).unwrap();
        let b = sample_negatives("q", &top, &corpus, 100, 7, |_| Ok(0.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.doc_ids.len(), 100);
        assert!(a.doc_ids.iter().all(|d| !corpus[..10].contains(d)));
        let unique: HashSet<_> = a.doc_ids.iter().collect();
        assert_eq!(unique.len(), 100);
        let c = sample_negatives("q", &top, &corpus, 100, 8, |_| Ok(0.0)).unwrap();
        assert_ne!(a.doc_ids, c.doc_ids);
    }

    #[test]
    fn negatives_take_remainder() {
        let corpus = ids(50);
        let top = run_of(&corpus[..10]);
        let s = sample_negatives("q", &top, &corpus, 100, 1, |_| Ok(1.0)).unwrap();
        assert_eq!(s.doc_ids, corpus[10..].to_vec());
    }

    #[test]
    fn negatives_min_score() {
        let s = NegativeSample::new("q", vec!["a".into(), "b".into(), "c".into()], vec![0.5, 0.2, 0.4]).unwrap();
        assert_eq!(s.min_score, 0.2);
    }

    #[test]
    fn negatives_need_candidates() {
        let corpus = ids(5);
        let top = run_of(&corpus);
        assert!(sample_negatives("q", &top, &corpus, 100, 1, |_| Ok(1.0)).is_err());
    }
}
