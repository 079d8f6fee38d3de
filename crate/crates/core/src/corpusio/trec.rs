//! TREC run (`qid Q0 docid rank score tag`) and qrels (`qid 0 docid rel`)
//! files.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{data_lines, read_to_string, write_file};
use crate::retrieval::SimilarityKind;
use crate::{Error, Result};

/// Documents retrieved for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    query_id: String,
    items: Vec<(String, f64)>,
    similarity: SimilarityKind,
}

impl RankedList {
    /// Validates finite, non-increasing scores and unique doc ids.
    pub fn new(
        query_id: impl Into<String>,
        items: Vec<(String, f64)>,
        similarity: SimilarityKind,
    ) -> Result<Self> {
        let query_id = query_id.into();
        let mut seen = HashSet::with_capacity(items.len());
        for (i, (doc, score)) in items.iter().enumerate() {
            if !score.is_finite() {
                return Err(Error::invalid(format!(
                    "query {query_id}: non-finite score for {doc}"
                )));
            }
            if !seen.insert(doc.as_str()) {
                return Err(Error::invalid(format!(
                    "query {query_id}: duplicate doc id {doc}"
                )));
            }
            if i > 0 && *score > items[i - 1].1 {
                return Err(Error::invalid(format!(
                    "query {query_id}: score order violated at rank {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            query_id,
            items,
            similarity,
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn items(&self) -> &[(String, f64)] {
        &self.items
    }

    pub fn similarity(&self) -> SimilarityKind {
        self.similarity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The first `k` items as a new list.
    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList {
            query_id: self.query_id.clone(),
            items: self.items.iter().take(k).cloned().collect(),
            similarity: self.similarity,
        }
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.items.iter().map(|(_, s)| *s)
    }
}

/// Parse a TREC run file. Lists come back in order of first appearance of
/// each query id, items sorted by the rank column.
pub fn read_run(path: &Path, similarity: SimilarityKind) -> Result<Vec<RankedList>> {
    let text = read_to_string(path)?;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(u64, String, f64, usize)>> = HashMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();

    for (lineno, line) in data_lines(&text) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| Error::parse(path, Some(lineno), format!("malformed run line: {msg}"));
        if cols.len() != 6 {
            return Err(bad(&format!("expected 6 columns, found {}", cols.len())));
        }
        let rank: u64 = cols[3].parse().map_err(|_| bad("rank is not an integer"))?;
        let score: f64 = cols[4].parse().map_err(|_| bad("score is not a number"))?;
        if !score.is_finite() {
            return Err(bad("score is not finite"));
        }
        let (qid, doc) = (cols[0].to_owned(), cols[2].to_owned());
        if !seen.insert((qid.clone(), doc.clone())) {
            return Err(Error::parse(
                path,
                Some(lineno),
                format!("duplicate (query, doc) pair ({qid}, {doc})"),
            ));
        }
        let entry = rows.entry(qid.clone()).or_insert_with(|| {
            order.push(qid.clone());
            Vec::new()
        });
        entry.push((rank, doc, score, lineno));
    }

    order
        .into_iter()
        .map(|qid| {
            let mut items = rows.remove(&qid).unwrap_or_default();
            items.sort_by_key(|(rank, ..)| *rank);
            for pair in items.windows(2) {
                if pair[1].2 > pair[0].2 {
                    return Err(Error::parse(
                        path,
                        Some(pair[1].3),
                        format!(
                            "score order: rank {} scores above rank {} for query {qid}",
                            pair[1].0, pair[0].0
                        ),
                    ));
                }
            }
            let items = items.into_iter().map(|(_, d, s, _)| (d, s)).collect();
            RankedList::new(qid, items, similarity)
        })
        .collect()
}

/// Write runs in TREC format with 1-based ranks. Scores use the shortest
/// representation that parses back to the same `f64`. Each comment becomes
/// a leading `# ` line.
pub fn write_run(path: &Path, runs: &[RankedList], tag: &str, comments: &[String]) -> Result<()> {
    if tag.is_empty() || tag.contains(char::is_whitespace) {
        return Err(Error::invalid(format!("run tag {tag:?} must be one non-empty word")));
    }
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    for run in runs {
        for (i, (doc, score)) in run.items.iter().enumerate() {
            writeln!(out, "{} Q0 {} {} {} {}", run.query_id, doc, i + 1, score, tag).unwrap();
        }
    }
    write_file(path, out.as_bytes())
}

/// Graded relevance judgments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    entries: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    /// Build from `(query, doc, grade)` triples, rejecting duplicate keys.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, u32)>,
    {
        let mut qrels = Qrels::default();
        for (q, d, g) in entries {
            qrels.insert(q, d, g)?;
        }
        Ok(qrels)
    }

    fn insert(&mut self, query: String, doc: String, grade: u32) -> Result<()> {
        let judged = self.entries.entry(query.clone()).or_default();
        if judged.insert(doc.clone(), grade).is_some() {
            return Err(Error::invalid(format!("duplicate judgment ({query}, {doc})")));
        }
        Ok(())
    }

    pub fn grade(&self, query: &str, doc: &str) -> u32 {
        self.entries
            .get(query)
            .and_then(|j| j.get(doc))
            .copied()
            .unwrap_or(0)
    }

    /// All judgments for `query`, if the query appears at all.
    pub fn judgments(&self, query: &str) -> Option<&BTreeMap<String, u32>> {
        self.entries.get(query)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn read_qrels(path: &Path) -> Result<Qrels> {
    let text = read_to_string(path)?;
    let mut qrels = Qrels::default();
    for (lineno, line) in data_lines(&text) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: String| Error::parse(path, Some(lineno), msg);
        if cols.len() != 4 {
            return Err(bad(format!(
                "malformed qrels line: expected 4 columns, found {}",
                cols.len()
            )));
        }
        let grade: i64 = cols[3]
            .parse()
            .map_err(|_| bad(format!("malformed qrels line: grade {:?}", cols[3])))?;
        if grade < 0 {
            return Err(bad(format!("negative grade {grade}")));
        }
        let grade = u32::try_from(grade).map_err(|_| bad(format!("grade {grade} too large")))?;
        qrels
            .insert(cols[0].to_owned(), cols[2].to_owned(), grade)
            .map_err(|e| bad(e.to_string()))?;
    }
    Ok(qrels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn run_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r", "q1 Q0 d2 2 0.8 t\nq1 Q0 d1 1 0.9 t\n");
        let runs = read_run(&p, SimilarityKind::Dot).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(
            runs[0].items(),
            [("d1".to_owned(), 0.9), ("d2".to_owned(), 0.8)]
        );
    }

    #[test]
    fn run_score_order_violation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r", "q1 Q0 d1 1 0.8 t\nq1 Q0 d2 2 0.9 t\n");
        let err = read_run(&p, SimilarityKind::Dot).unwrap_err();
        assert!(err.to_string().contains("score order"), "{err}");
    }

    #[test]
    fn run_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r", "");
        assert!(read_run(&p, SimilarityKind::Cosine).unwrap().is_empty());
    }

    #[test]
    fn run_duplicate_pair() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r", "q1 Q0 d1 1 0.9 t\nq1 Q0 d1 2 0.8 t\n");
        assert!(read_run(&p, SimilarityKind::Dot)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }

    #[test]
    fn run_malformed_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r", "q1 Q0 d1 1 0.9\n");
        let err = read_run(&p, SimilarityKind::Dot).unwrap_err();
        assert!(err.to_string().contains(":1: malformed"), "{err}");
    }

    #[test]
    fn run_write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.run");
        let run = RankedList::new(
            "q",
            vec![("a".into(), 0.1 + 0.2), ("b".into(), -1.0 / 3.0)],
            SimilarityKind::Cosine,
        )
        .unwrap();
        write_run(&p, std::slice::from_ref(&run), "tag", &["seed=1".into()]).unwrap();
        assert_eq!(read_run(&p, SimilarityKind::Cosine).unwrap(), vec![run]);
    }

    #[test]
    fn qrels_single_entry_and_grades() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "q", "q1 0 d1 1\nq1 0 d2 2\n");
        let qrels = read_qrels(&p).unwrap();
        assert_eq!(qrels.grade("q1", "d1"), 1);
        assert_eq!(qrels.grade("q1", "d2"), 2);
        assert_eq!(qrels.grade("q1", "d3"), 0);
        assert_eq!(qrels.len(), 2);
    }

    #[test]
    fn qrels_errors() {
        let dir = tempfile::tempdir().unwrap();
        let dup = write(&dir, "a", "q1 0 d1 1\nq1 0 d1 0\n");
        assert!(read_qrels(&dup).unwrap_err().to_string().contains("duplicate"));
        let neg = write(&dir, "b", "q1 0 d1 -1\n");
        assert!(read_qrels(&neg).unwrap_err().to_string().contains("negative grade"));
        let short = write(&dir, "c", "q1 d1 1\n");
        assert!(read_qrels(&short).unwrap_err().to_string().contains("malformed"));
    }

    #[test]
    fn ranked_list_rejects_bad_items() {
        assert!(RankedList::new("q", vec![("a".into(), 0.1), ("b".into(), 0.2)], SimilarityKind::Dot).is_err());
        assert!(RankedList::new("q", vec![("a".into(), 0.2), ("a".into(), 0.1)], SimilarityKind::Dot).is_err());
    }
}
