//! Model-selection criteria and the rankings they induce.
//!
//! Each criterion reduces one model's outputs on a target dataset to a
//! scalar. [`assemble_ranking`] turns a table of those scalars into a
//! ranking of the registry, best first.

mod criteria;

pub use criteria::{
    binary_entropy, binary_entropy_score, corpus_fd_score, extracted_fd_score,
    query_alteration_score, query_similarity_score, rank_probabilities, select_indomain,
    PROBABILITY_FLOOR,
};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpusio::{write_file, ModelRegistry};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Indomain,
    Qsim,
    FdCorpus,
    FdExtracted,
    Entropy,
    Qalter,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::Indomain,
        MethodKind::Qsim,
        MethodKind::FdCorpus,
        MethodKind::FdExtracted,
        MethodKind::Entropy,
        MethodKind::Qalter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Indomain => "indomain",
            MethodKind::Qsim => "qsim",
            MethodKind::FdCorpus => "fd_corpus",
            MethodKind::FdExtracted => "fd_extracted",
            MethodKind::Entropy => "entropy",
            MethodKind::Qalter => "qalter",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            MethodKind::Indomain | MethodKind::Qsim => Orientation::HigherBetter,
            _ => Orientation::LowerBetter,
        }
    }

    /// Human-readable row title for reports.
    pub fn title(self) -> &'static str {
        match self {
            MethodKind::Indomain => "In-Domain Performance",
            MethodKind::Qsim => "Query Similarity",
            MethodKind::FdCorpus => "Corpus Similarity",
            MethodKind::FdExtracted => "Extracted Doc Similarity",
            MethodKind::Entropy => "Binary Entropy",
            MethodKind::Qalter => "Query Alteration Std",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    /// Accepts a bare kind or a variant label such as `entropy@10`.
    fn from_str(s: &str) -> Result<Self> {
        let kind = s.split('@').next().unwrap_or_default();
        MethodKind::ALL
            .into_iter()
            .find(|m| m.as_str() == kind)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::HigherBetter => "higher_better",
            Orientation::LowerBetter => "lower_better",
        }
    }

    /// Map a raw score to "larger is better".
    pub fn goodness(self, score: f64) -> f64 {
        match self {
            Orientation::HigherBetter => score,
            Orientation::LowerBetter => -score,
        }
    }
}

/// Per-model criterion values for one method variant on one dataset.
///
/// `label` names the variant (`entropy@10`, `qalter@p0.1`); the part before
/// `@` is the method kind.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScoreTable {
    pub method: MethodKind,
    pub label: String,
    pub dataset: String,
    pub scores: BTreeMap<String, f64>,
    pub params: Map<String, Value>,
}

impl MethodScoreTable {
    pub fn new(label: &str, dataset: &str, params: Map<String, Value>) -> Result<Self> {
        if label.is_empty() || label.contains([',', '"', '\n']) {
            return Err(Error::invalid(format!("method label {label:?} is not CSV-safe")));
        }
        Ok(Self {
            method: label.parse()?,
            label: label.to_owned(),
            dataset: dataset.to_owned(),
            scores: BTreeMap::new(),
            params,
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.method.orientation()
    }

    pub fn insert(&mut self, model_id: &str, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::Numeric(format!(
                "{} score for {model_id} on {} is not finite",
                self.label, self.dataset
            )));
        }
        if self.scores.insert(model_id.to_owned(), score).is_some() {
            return Err(Error::invalid(format!(
                "duplicate {} score for {model_id} on {}",
                self.label, self.dataset
            )));
        }
        Ok(())
    }

    /// The same scores attributed to another dataset.
    pub fn retarget(&self, dataset: &str) -> Self {
        Self {
            dataset: dataset.to_owned(),
            ..self.clone()
        }
    }

    /// Check that exactly the registry's models are scored.
    pub fn check_complete(&self, registry: &ModelRegistry) -> Result<()> {
        for id in registry.ids() {
            if !self.scores.contains_key(id) {
                return Err(Error::Missing(format!(
                    "{} score for model {id} on {}",
                    self.label, self.dataset
                )));
            }
        }
        if let Some(extra) = self.scores.keys().find(|m| registry.position(m).is_none()) {
            return Err(Error::invalid(format!(
                "{} table for {} scores unknown model {extra}",
                self.label, self.dataset
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MethodRecord {
    method: String,
    dataset: String,
    model: String,
    score: f64,
    orientation: String,
    params_json: String,
}

/// Write tables as `method,dataset,model,score,orientation,params_json`,
/// tables in the given order and models in registry order.
pub fn write_method_tables(
    path: &Path,
    tables: &[MethodScoreTable],
    registry: &ModelRegistry,
    comments: &[String],
) -> Result<()> {
    let mut out = Vec::new();
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        let csv_err = |e: csv::Error| Error::invalid(e.to_string());
        writer
            .write_record(["method", "dataset", "model", "score", "orientation", "params_json"])
            .map_err(csv_err)?;
        for table in tables {
            table.check_complete(registry)?;
            let params = serde_json::to_string(&table.params).map_err(|e| Error::invalid(e.to_string()))?;
            for model in registry.ids() {
                writer
                    .write_record([
                        table.label.as_str(),
                        &table.dataset,
                        model,
                        &table.scores[model].to_string(),
                        table.orientation().as_str(),
                        &params,
                    ])
                    .map_err(csv_err)?;
            }
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
    }
    write_file(path, &out)
}

/// Read tables written by [`write_method_tables`], grouped by
/// `(method, dataset)` in order of first appearance.
pub fn read_method_tables(path: &Path) -> Result<Vec<MethodScoreTable>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut tables: Vec<MethodScoreTable> = Vec::new();
    for record in reader.deserialize::<MethodRecord>() {
        let bad = |e: &dyn fmt::Display, line: Option<u64>| {
            Error::parse(path, line.map(|l| l as usize), e.to_string())
        };
        let r = record.map_err(|e| bad(&e, e.position().map(|p| p.line())))?;
        let idx = match tables
            .iter()
            .position(|t| t.label == r.method && t.dataset == r.dataset)
        {
            Some(i) => i,
            None => {
                let params: Map<String, Value> =
                    serde_json::from_str(&r.params_json).map_err(|e| bad(&e, None))?;
                tables.push(MethodScoreTable::new(&r.method, &r.dataset, params).map_err(|e| bad(&e, None))?);
                tables.len() - 1
            }
        };
        let table = &mut tables[idx];
        if table.orientation().as_str() != r.orientation {
            return Err(bad(
                &format!("orientation {} does not match method {}", r.orientation, r.method),
                None,
            ));
        }
        table.insert(&r.model, r.score).map_err(|e| bad(&e, None))?;
    }
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Method(String),
    GroundTruth,
}

/// Registry models ordered best first.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRanking {
    pub dataset: String,
    /// `(model id, goodness)`; goodness is non-increasing.
    pub entries: Vec<(String, f64)>,
    pub provenance: Provenance,
}

impl ModelRanking {
    pub fn best(&self) -> &str {
        &self.entries[0].0
    }

    pub fn order(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(m, _)| m.as_str())
    }
}

/// Sort `(model, goodness)` pairs by goodness descending, ties in registry
/// order. Models unknown to the registry sort last, by id.
pub fn rank_by_goodness(mut scores: Vec<(String, f64)>, registry: &ModelRegistry) -> Vec<(String, f64)> {
    let pos = |m: &str| registry.position(m).unwrap_or(usize::MAX);
    scores.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| pos(&a.0).cmp(&pos(&b.0)))
            .then_with(|| a.0.cmp(&b.0))
    });
    scores
}

/// The predicted ranking of `table`, best model first.
pub fn assemble_ranking(table: &MethodScoreTable, registry: &ModelRegistry) -> Result<ModelRanking> {
    table.check_complete(registry)?;
    let orientation = table.orientation();
    let goodness = registry
        .ids()
        .map(|m| (m.to_owned(), orientation.goodness(table.scores[m])))
        .collect();
    Ok(ModelRanking {
        dataset: table.dataset.clone(),
        entries: rank_by_goodness(goodness, registry),
        provenance: Provenance::Method(table.label.clone()),
    })
}

/// Per-query intermediate values of a criterion: one value for most
/// methods, the list of score changes for query alteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryScoreDetail {
    pub entries: Vec<(String, Vec<f64>)>,
}

impl QueryScoreDetail {
    pub fn single(entries: Vec<(String, f64)>) -> Self {
        Self {
            entries: entries.into_iter().map(|(q, v)| (q, vec![v])).collect(),
        }
    }

    pub fn value(&self, query_id: &str) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|(q, _)| q == query_id)
            .map(|(_, v)| v.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpusio::ModelEntry;
    use crate::retrieval::SimilarityKind;

    fn registry(ids: &[&str]) -> ModelRegistry {
        ModelRegistry::new(
            ids.iter()
                .map(|id| ModelEntry {
                    model_id: id.to_string(),
                    similarity: SimilarityKind::Dot,
                    display_name: id.to_uppercase(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn table(label: &str, scores: &[(&str, f64)]) -> MethodScoreTable {
        let mut t = MethodScoreTable::new(label, "d", Map::new()).unwrap();
        for (m, s) in scores {
            t.insert(m, *s).unwrap();
        }
        t
    }

    #[test]
    fn labels_parse_to_kinds() {
        assert_eq!("entropy@10".parse::<MethodKind>().unwrap(), MethodKind::Entropy);
        assert_eq!("fd_corpus".parse::<MethodKind>().unwrap(), MethodKind::FdCorpus);
        assert!("bogus".parse::<MethodKind>().is_err());
    }

    #[test]
    fn lower_better_flips_order() {
        let reg = registry(&["a", "b"]);
        let r = assemble_ranking(&table("fd_corpus", &[("a", 2.0), ("b", 1.0)]), &reg).unwrap();
        assert_eq!(r.order().collect::<Vec<_>>(), ["b", "a"]);
    }

    #[test]
    fn ties_follow_registry() {
        let reg = registry(&["z", "a", "m"]);
        let r = assemble_ranking(&table("qsim", &[("a", 0.5), ("m", 0.5), ("z", 0.5)]), &reg).unwrap();
        assert_eq!(r.order().collect::<Vec<_>>(), ["z", "a", "m"]);
    }

    #[test]
    fn missing_model_rejected() {
        let reg = registry(&["a", "b"]);
        assert!(assemble_ranking(&table("qsim", &[("a", 0.5)]), &reg).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let reg = registry(&["a", "b"]);
        let mut params = Map::new();
        params.insert("k".into(), Value::from(10));
        params.insert("seed".into(), Value::from(3));
        let mut t = MethodScoreTable::new("entropy@10", "x", params).unwrap();
        t.insert("a", 1.25).unwrap();
        t.insert("b", 0.1 + 0.2).unwrap();
        write_method_tables(&path, std::slice::from_ref(&t), &reg, &["c".into()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("entropy@10,x,a,1.25,lower_better,\"{\"\"k\"\":10,\"\"seed\"\":3}\""), "{text}");
        assert_eq!(read_method_tables(&path).unwrap(), vec![t]);
    }
}
