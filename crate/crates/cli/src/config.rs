//! Pipeline configuration: one JSON file, paths relative to its directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use drselect_core::corpusio::ModelRegistry;
use drselect_core::perturb::PerturbConfig;
use drselect_core::rng::sha256_hex;
use drselect_core::selectors::MethodKind;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSample {
    #[serde(default = "default_sample_docs")]
    pub docs: usize,
    #[serde(default = "default_sample_queries")]
    pub queries: usize,
}

impl Default for SourceSample {
    fn default() -> Self {
        Self {
            docs: default_sample_docs(),
            queries: default_sample_queries(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QalterConfig {
    #[serde(default = "default_mask_ps")]
    pub p: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Retrieved documents per query whose score changes are measured.
    #[serde(default = "default_qalter_k")]
    pub k: usize,
    #[serde(default = "default_mask_token")]
    pub mask_token: String,
}

impl Default for QalterConfig {
    fn default() -> Self {
        Self {
            p: default_mask_ps(),
            trials: default_trials(),
            k: default_qalter_k(),
            mask_token: default_mask_token(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsConfig {
    #[serde(default = "default_enabled")]
    pub enabled: Vec<MethodKind>,
    #[serde(default = "default_cutoffs")]
    pub entropy_cutoffs: Vec<usize>,
    /// Negative documents sampled per query for entropy normalization.
    #[serde(default = "default_negatives")]
    pub negatives: usize,
    #[serde(default = "default_extracted_k")]
    pub extracted_k: usize,
    #[serde(default)]
    pub qalter: QalterConfig,
}

impl Default for MethodsConfig {
    fn default() -> Self {
        Self {
            enabled: default_enabled(),
            entropy_cutoffs: default_cutoffs(),
            negatives: default_negatives(),
            extracted_k: default_extracted_k(),
            qalter: QalterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub registry: PathBuf,
    pub source: DatasetSpec,
    pub datasets: Vec<DatasetSpec>,
    /// `model,dataset,value` table holding every model's score on the source.
    pub indomain_effectiveness: PathBuf,
    pub seed: u64,
    #[serde(default)]
    pub source_sample: SourceSample,
    #[serde(default)]
    pub methods: MethodsConfig,
    #[serde(default = "default_ndcg_k")]
    pub ndcg_k: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_sample_docs() -> usize {
    10_000
}
fn default_sample_queries() -> usize {
    1_000
}
fn default_mask_ps() -> Vec<f64> {
    vec![0.1, 0.2, 0.3]
}
fn default_trials() -> usize {
    3
}
fn default_qalter_k() -> usize {
    10
}
fn default_mask_token() -> String {
    "[MASK]".into()
}
fn default_enabled() -> Vec<MethodKind> {
    MethodKind::ALL.to_vec()
}
fn default_cutoffs() -> Vec<usize> {
    vec![10, 1000]
}
fn default_negatives() -> usize {
    100
}
fn default_extracted_k() -> usize {
    100
}
fn default_ndcg_k() -> usize {
    10
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One configured method variant, e.g. `entropy@10`.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub kind: MethodKind,
    pub label: String,
}

/// A validated config with every path resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
    pub digest: String,
    pub registry: ModelRegistry,
    pub output_dir: PathBuf,
}

impl Loaded {
    pub fn load(path: &Path, output_override: Option<&Path>) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: PipelineConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let registry_path = base_dir.join(&config.registry);
        let registry = ModelRegistry::from_json_file(&registry_path).map_err(CliError::config)?;
        let output_dir = match output_override {
            Some(p) => p.to_path_buf(),
            None => base_dir.join(&config.output_dir),
        };
        let loaded = Self {
            digest: sha256_hex(&bytes),
            config,
            base_dir,
            registry,
            output_dir,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        let m = &c.methods;
        let fail = |msg: String| Err(CliError::Config(msg));
        if c.datasets.is_empty() {
            return fail("no target datasets".into());
        }
        let mut names = BTreeSet::new();
        for d in std::iter::once(&c.source).chain(&c.datasets) {
            if d.name.is_empty() || d.name.contains(|ch: char| ch.is_whitespace() || ch == '/' || ch == ',') {
                return fail(format!("dataset name {:?} must be a plain word", d.name));
            }
            if !names.insert(d.name.as_str()) {
                return fail(format!("dataset {} listed twice", d.name));
            }
            if !self.resolve(&d.path).is_dir() {
                return fail(format!("dataset directory {} does not exist", self.resolve(&d.path).display()));
            }
        }
        if !self.resolve(&c.indomain_effectiveness).is_file() {
            return fail(format!(
                "effectiveness table {} does not exist",
                self.resolve(&c.indomain_effectiveness).display()
            ));
        }
        if c.ndcg_k == 0 {
            return fail("ndcg_k must be positive".into());
        }
        if c.source_sample.docs < 2 || c.source_sample.queries < 1 {
            return fail("source sample needs at least 2 documents and 1 query".into());
        }
        if m.enabled.is_empty() {
            return fail("no methods enabled".into());
        }
        if m.entropy_cutoffs.is_empty() || m.entropy_cutoffs.contains(&0) {
            return fail("entropy cutoffs must be positive".into());
        }
        if m.negatives == 0 || m.extracted_k == 0 || m.qalter.k == 0 {
            return fail("negatives, extracted_k and qalter.k must be positive".into());
        }
        if m.qalter.p.is_empty() {
            return fail("qalter.p lists no mask proportions".into());
        }
        let mut seen = Vec::new();
        for &p in &m.qalter.p {
            self.perturb_config(p)?;
            if seen.contains(&p) {
                return fail(format!("mask proportion {p} listed twice"));
            }
            seen.push(p);
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn perturb_config(&self, p: f64) -> Result<PerturbConfig> {
        let cfg = PerturbConfig {
            p,
            seed: self.config.seed,
            trials: self.config.methods.qalter.trials,
            mask_token: self.config.methods.qalter.mask_token.clone(),
        };
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }

    pub fn enabled(&self, kind: MethodKind) -> bool {
        self.config.methods.enabled.contains(&kind)
    }

    /// Every enabled method variant, in method order.
    pub fn variants(&self) -> Vec<Variant> {
        let m = &self.config.methods;
        let mut out = Vec::new();
        for kind in MethodKind::ALL {
            if !self.enabled(kind) {
                continue;
            }
            let labels: Vec<String> = match kind {
                MethodKind::FdExtracted => vec![format!("{kind}@{}", m.extracted_k)],
                MethodKind::Entropy => m.entropy_cutoffs.iter().map(|c| format!("{kind}@{c}")).collect(),
                MethodKind::Qalter => m.qalter.p.iter().map(|p| format!("{kind}@p{p}")).collect(),
                _ => vec![kind.to_string()],
            };
            out.extend(labels.into_iter().map(|label| Variant { kind, label }));
        }
        out
    }

    /// Depth of the stored runs: deep enough for every consumer.
    pub fn run_depth(&self) -> usize {
        let m = &self.config.methods;
        let mut depth = self.config.ndcg_k;
        if self.enabled(MethodKind::Entropy) {
            depth = depth.max(m.entropy_cutoffs.iter().copied().max().unwrap_or(0));
        }
        if self.enabled(MethodKind::Qalter) {
            depth = depth.max(m.qalter.k);
        }
        depth
    }

    /// Provenance lines written at the top of every output file.
    pub fn provenance(&self) -> Vec<String> {
        vec![
            format!("config_sha256={}", self.digest),
            format!("seed={}", self.config.seed),
        ]
    }

    pub fn run_tag(&self) -> String {
        format!("drselect-{}", &self.digest[..12])
    }
}
