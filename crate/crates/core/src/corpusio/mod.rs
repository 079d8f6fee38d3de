//! File formats and the validated in-memory types they load into.
//!
//! Every loader checks the invariants of the type it produces and reports
//! the violated rule by name. Loaded values are immutable.

mod bundle;
mod embeddings;
mod tables;
mod trec;

pub use bundle::{
    read_doc_ids, read_queries_tsv, write_queries_tsv, BundleKind, DatasetBundle, EmbeddingRef,
    Query,
};
pub use embeddings::{ids_path, read_embeddings, write_embeddings, EmbeddingMatrix, Role, MAGIC};
pub use tables::{EffectivenessTable, MetricKind, ModelEntry, ModelRegistry};
pub use trec::{read_qrels, read_run, write_run, Qrels, RankedList};

use std::path::Path;

use crate::{Error, Result};

/// Write `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Lines that carry data: not blank and not `#` comments. Yields 1-based
/// line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}
