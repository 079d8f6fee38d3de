//! Unsupervised selection of dense retrieval models for an unlabeled target
//! corpus.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpusio`]: on-disk formats (embedding matrices, TREC runs and qrels,
//!   effectiveness tables, model registries, dataset bundles).
//! - [`retrieval`]: exact brute-force scoring, top-k retrieval and negative
//!   sampling.
//! - [`gaussdist`]: Gaussian summaries of embedding sets and the Fréchet
//!   distance between them.
//! - [`perturb`]: deterministic query masking.
//! - [`selectors`]: the six selection criteria and model rankings.
//! - [`ireval`]: nDCG@k and ground-truth model rankings.
//! - [`metaeval`]: Kendall tau, effectiveness regret and report tables.

pub mod corpusio;
pub mod error;
pub mod gaussdist;
pub mod ireval;
pub mod metaeval;
pub mod perturb;
pub mod retrieval;
pub mod rng;
pub mod selectors;

pub use error::{Error, Result};
