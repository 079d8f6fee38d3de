use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_to_string, write_file};
use crate::retrieval::SimilarityKind;
use crate::{Error, Result};

/// Ground-truth effectiveness measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    NdcgAt(usize),
}

impl Default for MetricKind {
    fn default() -> Self {
        MetricKind::NdcgAt(10)
    }
}

impl MetricKind {
    pub fn cutoff(self) -> usize {
        match self {
            MetricKind::NdcgAt(k) => k,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::NdcgAt(k) => write!(f, "ndcg@{k}"),
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s
            .strip_prefix("ndcg@")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|k| *k >= 1)
            .ok_or_else(|| Error::invalid(format!("unknown metric {s:?} (expected ndcg@<k>)")))?;
        Ok(MetricKind::NdcgAt(k))
    }
}

/// Effectiveness of each model on each dataset, values in `[0, 1]`.
///
/// Datasets and models remember their first-insertion order so reports list
/// them the way the input did.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessTable {
    metric: MetricKind,
    values: BTreeMap<(String, String), f64>,
    datasets: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EffectivenessRecord {
    model: String,
    dataset: String,
    value: f64,
}

impl EffectivenessTable {
    pub fn new(metric: MetricKind) -> Self {
        Self {
            metric,
            values: BTreeMap::new(),
            datasets: Vec::new(),
        }
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn insert(&mut self, model: &str, dataset: &str, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid(format!(
                "effectiveness {value} for ({model}, {dataset}) outside [0, 1]"
            )));
        }
        let key = (model.to_owned(), dataset.to_owned());
        if self.values.contains_key(&key) {
            return Err(Error::invalid(format!(
                "duplicate effectiveness entry ({model}, {dataset})"
            )));
        }
        if !self.datasets.iter().any(|d| d == dataset) {
            self.datasets.push(dataset.to_owned());
        }
        self.values.insert(key, value);
        Ok(())
    }

    pub fn get(&self, model: &str, dataset: &str) -> Option<f64> {
        self.values
            .get(&(model.to_owned(), dataset.to_owned()))
            .copied()
    }

    /// Like [`get`](Self::get) but a missing entry is an error.
    pub fn require(&self, model: &str, dataset: &str) -> Result<f64> {
        self.get(model, dataset).ok_or_else(|| {
            Error::Missing(format!("{} value for model {model} on {dataset}", self.metric))
        })
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    /// Merge all entries of `other` into `self`.
    pub fn extend(&mut self, other: &EffectivenessTable) -> Result<()> {
        for ((m, d), v) in &other.values {
            self.insert(m, d, *v)?;
        }
        Ok(())
    }

    /// Read a `model,dataset,value` CSV. Lines starting with `#` are skipped.
    pub fn read_csv(path: &Path, metric: MetricKind) -> Result<Self> {
        let text = read_to_string(path)?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(path, None, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["model", "dataset", "value"] {
            return Err(Error::parse(
                path,
                None,
                "header must be model,dataset,value",
            ));
        }
        let mut table = Self::new(metric);
        for record in reader.deserialize::<EffectivenessRecord>() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize);
                Error::parse(path, line, e.to_string())
            })?;
            table
                .insert(&record.model, &record.dataset, record.value)
                .map_err(|e| Error::parse(path, None, e.to_string()))?;
        }
        Ok(table)
    }

    /// Write a `model,dataset,value` CSV, rows grouped by dataset in
    /// insertion order and models in `registry` order. `comments` become
    /// leading `# ` lines.
    pub fn write_csv(&self, path: &Path, registry: &ModelRegistry, comments: &[String]) -> Result<()> {
        let mut out = Vec::new();
        for c in comments {
            out.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        {
            let mut writer = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::invalid(e.to_string());
            writer.write_record(["model", "dataset", "value"]).map_err(csv_err)?;
            for dataset in &self.datasets {
                for entry in registry.iter() {
                    if let Some(v) = self.get(&entry.model_id, dataset) {
                        writer
                            .write_record([entry.model_id.as_str(), dataset, &v.to_string()])
                            .map_err(csv_err)?;
                    }
                }
            }
            writer.flush().map_err(|e| Error::io(path, e))?;
        }
        write_file(path, &out)
    }
}

/// One candidate retriever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model_id: String,
    pub similarity: SimilarityKind,
    pub display_name: String,
}

/// The candidate pool. Its order is the canonical tie-break everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModelEntry>", into = "Vec<ModelEntry>")]
pub struct ModelRegistry {
    entries: Vec<ModelEntry>,
}

impl ModelRegistry {
    pub fn new(entries: Vec<ModelEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("registry must list at least one model"));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.model_id.is_empty() || e.model_id.contains(|c: char| c.is_whitespace() || c == '/') {
                return Err(Error::invalid(format!(
                    "model id {:?} must be non-empty without whitespace or '/'",
                    e.model_id
                )));
            }
            if !seen.insert(e.model_id.as_str()) {
                return Err(Error::invalid(format!("duplicate model id {:?}", e.model_id)));
            }
        }
        Ok(Self { entries })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ModelEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.model_id.as_str())
    }

    /// Registry position of `model_id`.
    pub fn position(&self, model_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.model_id == model_id)
    }

    pub fn get(&self, model_id: &str) -> Option<&ModelEntry> {
        self.entries.iter().find(|e| e.model_id == model_id)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, Some(e.line()), e.to_string()))
    }
}

impl TryFrom<Vec<ModelEntry>> for ModelRegistry {
    type Error = Error;

    fn try_from(entries: Vec<ModelEntry>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ModelRegistry> for Vec<ModelEntry> {
    fn from(r: ModelRegistry) -> Self {
        r.entries
    }
}

impl<'a> IntoIterator for &'a ModelRegistry {
    type Item = &'a ModelEntry;
    type IntoIter = std::slice::Iter<'a, ModelEntry>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> ModelRegistry {
        ModelRegistry::new(vec![
            ModelEntry {
                model_id: "b".into(),
                similarity: SimilarityKind::Dot,
                display_name: "B".into(),
            },
            ModelEntry {
                model_id: "a".into(),
                similarity: SimilarityKind::Cosine,
                display_name: "A".into(),
            },
        ])
        .unwrap()
    }

    #[test]
    fn metric_parse() {
        assert_eq!("ndcg@10".parse::<MetricKind>().unwrap(), MetricKind::NdcgAt(10));
        assert!("ndcg@0".parse::<MetricKind>().is_err());
        assert!("map".parse::<MetricKind>().is_err());
        assert_eq!(MetricKind::NdcgAt(5).to_string(), "ndcg@5");
    }

    #[test]
    fn effectiveness_range_checked() {
        let mut t = EffectivenessTable::new(MetricKind::default());
        assert!(t.insert("a", "d", 1.2).is_err());
        t.insert("a", "d", 0.5).unwrap();
        assert!(t.insert("a", "d", 0.4).is_err());
    }

    #[test]
    fn effectiveness_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let mut t = EffectivenessTable::new(MetricKind::default());
        t.insert("a", "x", 0.25).unwrap();
        t.insert("b", "x", 0.5).unwrap();
        t.insert("a", "y", 0.125).unwrap();
        t.write_csv(&path, &registry(), &["seed=1".into()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# seed=1\nmodel,dataset,value\nb,x,0.5\na,x,0.25\n"));
        let back = EffectivenessTable::read_csv(&path, MetricKind::default()).unwrap();
        assert_eq!(back.get("a", "y"), Some(0.125));
        assert_eq!(back.datasets(), ["x", "y"]);
    }

    #[test]
    fn effectiveness_csv_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        std::fs::write(&path, "m,d,v\na,x,0.1\n").unwrap();
        assert!(EffectivenessTable::read_csv(&path, MetricKind::default()).is_err());
    }

    #[test]
    fn registry_rejects_duplicates() {
        let e = ModelEntry {
            model_id: "a".into(),
            similarity: SimilarityKind::Dot,
            display_name: "A".into(),
        };
        assert!(ModelRegistry::new(vec![e.clone(), e]).is_err());
        assert!(ModelRegistry::new(vec![]).is_err());
    }

    #[test]
    fn registry_json() {
        let json = r#"[{"model_id":"x","similarity":"cosine","display_name":"X"}]"#;
        let r: ModelRegistry = serde_json::from_str(json).unwrap();
        assert_eq!(r.get("x").unwrap().similarity, SimilarityKind::Cosine);
        let dup = r#"[{"model_id":"x","similarity":"dot","display_name":"X"},{"model_id":"x","similarity":"dot","display_name":"Y"}]"#;
        assert!(serde_json::from_str::<ModelRegistry>(dup).is_err());
    }
}
