use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::write_file;
use crate::{Error, Result};

/// First eight bytes of every embedding file.
pub const MAGIC: &[u8; 8] = b"DREMB1\0\0";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// What an embedding matrix encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    SourceQueries,
    TargetQueries,
    SourceDocs,
    TargetDocs,
    PerturbedQueries,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::SourceQueries => "source_queries",
            Role::TargetQueries => "target_queries",
            Role::SourceDocs => "source_docs",
            Role::TargetDocs => "target_docs",
            Role::PerturbedQueries => "perturbed_queries",
        }
    }

    pub fn is_docs(self) -> bool {
        matches!(self, Role::SourceDocs | Role::TargetDocs)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "source_queries" => Role::SourceQueries,
            "target_queries" => Role::TargetQueries,
            "source_docs" => Role::SourceDocs,
            "target_docs" => Role::TargetDocs,
            "perturbed_queries" => Role::PerturbedQueries,
            other => return Err(Error::invalid(format!("unknown role {other:?}"))),
        })
    }
}

/// A dense row-major `f32` matrix with one identifier per row.
///
/// Construction validates: `dim > 0`, unique non-empty ids without line
/// breaks, `rows.len() == ids.len() * dim` and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    ids: Vec<String>,
    rows: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, rows: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        if rows.len() != ids.len() * dim {
            return Err(Error::invalid(format!(
                "row count mismatch: {} values for {} ids of dim {dim}",
                rows.len(),
                ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if id.is_empty() {
                return Err(Error::invalid("empty id"));
            }
            if id.contains(['\n', '\r']) {
                return Err(Error::invalid(format!("id {id:?} contains a line break")));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate id {id:?}")));
            }
        }
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {} (id {:?})",
                pos / dim,
                ids[pos / dim]
            )));
        }
        Ok(Self { dim, ids, rows })
    }

    /// Build from per-row vectors.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f32>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(ids, dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.rows.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.rows
    }

    /// Index of the row with identifier `id`. Linear scan.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// A new matrix made of the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut ids = Vec::with_capacity(indices.len());
        let mut rows = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("row index {i} out of range")));
            }
            ids.push(self.ids[i].clone());
            rows.extend_from_slice(self.row(i));
        }
        Self::new(ids, self.dim, rows)
    }
}

/// Sidecar id file for an embedding file: the extension replaced by `ids`.
pub fn ids_path(path: &Path) -> PathBuf {
    path.with_extension("ids")
}

/// Write `matrix` to `path` and its ids to the `.ids` sidecar.
pub fn write_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    if ids_path(path) == path {
        return Err(Error::invalid(format!(
            "{}: embedding file must not use the .ids extension",
            path.display()
        )));
    }
    let mut bytes = Vec::with_capacity(HEADER_LEN + matrix.rows.len() * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    let dim = u32::try_from(matrix.dim).map_err(|_| Error::invalid("dim exceeds u32"))?;
    bytes.extend_from_slice(&dim.to_le_bytes());
    bytes.extend_from_slice(&(matrix.len() as u64).to_le_bytes());
    for v in &matrix.rows {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &bytes)?;

    let mut ids = String::new();
    for id in &matrix.ids {
        ids.push_str(id);
        ids.push('\n');
    }
    write_file(&ids_path(path), ids.as_bytes())
}

/// Read and validate an embedding file and its `.ids` sidecar.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |msg: String| Error::parse(path, None, msg);
    if bytes.len() < HEADER_LEN {
        return Err(fail(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(fail("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(fail("dim must be positive".into()));
    }
    let count = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(dim))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| fail(format!("count {count} overflows")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(fail(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(fail(format!(
            "trailing bytes: {} beyond {expected}",
            payload.len() - expected
        )));
    }
    let rows: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
        return Err(fail(format!("non-finite value (NaN/Inf) at row {}", pos / dim)));
    }

    let sidecar = ids_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let ids: Vec<String> = text.lines().map(str::to_owned).collect();
    if ids.len() as u64 != count {
        return Err(Error::parse(
            &sidecar,
            None,
            format!("id count mismatch: {} ids for {count} rows", ids.len()),
        ));
    }
    EmbeddingMatrix::new(ids, dim, rows).map_err(|e| fail(e.to_string()))
}
