use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{data_lines, read_embeddings, read_qrels, read_to_string, write_file, EmbeddingMatrix, Qrels, Role};
use crate::perturb::perturbed_id;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub text: String,
}

/// Read a `qid<TAB>text` file. Blank lines and `#` comments are skipped.
pub fn read_queries_tsv(path: &Path) -> Result<Vec<Query>> {
    let text = read_to_string(path)?;
    let mut seen = HashSet::new();
    let mut queries = Vec::new();
    for (lineno, line) in data_lines(&text) {
        let bad = |msg: String| Error::parse(path, Some(lineno), msg);
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected qid<TAB>text".into()))?;
        let id = id.trim();
        if id.is_empty() {
            return Err(bad("empty query id".into()));
        }
        if body.trim().is_empty() {
            return Err(bad(format!("query {id} has empty text")));
        }
        if !seen.insert(id.to_owned()) {
            return Err(bad(format!("duplicate query id {id}")));
        }
        queries.push(Query {
            id: id.to_owned(),
            text: body.to_owned(),
        });
    }
    Ok(queries)
}

/// Write a `qid<TAB>text` file with LF endings; `comments` become leading
/// `# ` lines.
pub fn write_queries_tsv(path: &Path, queries: &[Query], comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    for q in queries {
        if q.id.contains(['\t', '\n']) || q.text.contains(['\t', '\n', '\r']) {
            return Err(Error::invalid(format!(
                "query {:?} contains a tab or line break",
                q.id
            )));
        }
        writeln!(out, "{}\t{}", q.id, q.text).unwrap();
    }
    write_file(path, out.as_bytes())
}

/// One document id per line.
pub fn read_doc_ids(path: &Path) -> Result<Vec<String>> {
    let text = read_to_string(path)?;
    let mut seen = HashSet::new();
    let mut ids = Vec::new();
    for (lineno, line) in data_lines(&text) {
        let id = line.trim();
        if !seen.insert(id.to_owned()) {
            return Err(Error::parse(path, Some(lineno), format!("duplicate doc id {id}")));
        }
        ids.push(id.to_owned());
    }
    Ok(ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleKind {
    Source,
    Target,
}

/// Location of one model's embedding file within a bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingRef {
    pub model_id: String,
    pub dataset: String,
    pub role: Role,
    pub path: PathBuf,
}

/// A dataset directory:
///
/// ```text
/// <root>/queries.tsv            qid<TAB>text
/// <root>/docs.ids               one document id per line
/// <root>/qrels.txt              TREC qrels (optional)
/// <root>/emb/<model>/queries.emb
/// <root>/emb/<model>/docs.emb
/// <root>/emb/<model>/perturbed_p<p>.emb
/// ```
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub name: String,
    pub kind: BundleKind,
    pub root: PathBuf,
    pub queries: Vec<Query>,
    pub doc_ids: Vec<String>,
}

impl DatasetBundle {
    pub fn open(name: &str, root: &Path, kind: BundleKind) -> Result<Self> {
        let queries = read_queries_tsv(&root.join("queries.tsv"))?;
        let doc_ids = read_doc_ids(&root.join("docs.ids"))?;
        if queries.is_empty() {
            return Err(Error::invalid(format!("dataset {name} has no queries")));
        }
        if doc_ids.is_empty() {
            return Err(Error::invalid(format!("dataset {name} has no documents")));
        }
        Ok(Self {
            name: name.to_owned(),
            kind,
            root: root.to_owned(),
            queries,
            doc_ids,
        })
    }

    pub fn query_role(&self) -> Role {
        match self.kind {
            BundleKind::Source => Role::SourceQueries,
            BundleKind::Target => Role::TargetQueries,
        }
    }

    pub fn doc_role(&self) -> Role {
        match self.kind {
            BundleKind::Source => Role::SourceDocs,
            BundleKind::Target => Role::TargetDocs,
        }
    }

    pub fn qrels_path(&self) -> PathBuf {
        self.root.join("qrels.txt")
    }

    pub fn qrels(&self) -> Result<Qrels> {
        read_qrels(&self.qrels_path())
    }

    fn reference(&self, model_id: &str, role: Role, file: &str) -> EmbeddingRef {
        EmbeddingRef {
            model_id: model_id.to_owned(),
            dataset: self.name.clone(),
            role,
            path: self.root.join("emb").join(model_id).join(file),
        }
    }

    pub fn queries_ref(&self, model_id: &str) -> EmbeddingRef {
        self.reference(model_id, self.query_role(), "queries.emb")
    }

    pub fn docs_ref(&self, model_id: &str) -> EmbeddingRef {
        self.reference(model_id, self.doc_role(), "docs.emb")
    }

    pub fn perturbed_ref(&self, model_id: &str, p: f64) -> EmbeddingRef {
        self.reference(model_id, Role::PerturbedQueries, &format!("perturbed_p{p}.emb"))
    }

    /// Ids the perturbed-query matrix must carry for `trials` trials.
    pub fn perturbed_ids(&self, trials: usize) -> Vec<String> {
        self.queries
            .iter()
            .flat_map(|q| (0..trials).map(move |t| perturbed_id(&q.id, t)))
            .collect()
    }

    pub fn load_queries(&self, model_id: &str) -> Result<EmbeddingMatrix> {
        let ids: Vec<String> = self.queries.iter().map(|q| q.id.clone()).collect();
        load_checked(&self.queries_ref(model_id), &ids)
    }

    pub fn load_docs(&self, model_id: &str) -> Result<EmbeddingMatrix> {
        load_checked(&self.docs_ref(model_id), &self.doc_ids)
    }

    pub fn load_perturbed(&self, model_id: &str, p: f64, trials: usize) -> Result<EmbeddingMatrix> {
        load_checked(&self.perturbed_ref(model_id, p), &self.perturbed_ids(trials))
    }
}

/// Load an embedding file and check its ids are exactly `expected` (as a set).
fn load_checked(r: &EmbeddingRef, expected: &[String]) -> Result<EmbeddingMatrix> {
    if !r.path.exists() {
        return Err(Error::Missing(format!(
            "embedding file {} ({} {} for {})",
            r.path.display(),
            r.dataset,
            r.role,
            r.model_id
        )));
    }
    let m = read_embeddings(&r.path)?;
    let want: HashSet<&str> = expected.iter().map(String::as_str).collect();
    let have: HashSet<&str> = m.ids().iter().map(String::as_str).collect();
    if want != have {
        let missing = want.difference(&have).count();
        let extra = have.difference(&want).count();
        return Err(Error::invalid(format!(
            "{}: id set differs from dataset {} ({missing} missing, {extra} unexpected)",
            r.path.display(),
            r.dataset
        )));
    }
    Ok(m)
}
