//! The experiment pipeline: ingest, retrieve, perturb, select, truth,
//! evaluate, report. Each stage reads what earlier stages wrote under the
//! output directory, so stages can run one at a time or all together.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use drselect_core::corpusio::{
    read_run, write_file, BundleKind, DatasetBundle, EffectivenessTable, EmbeddingMatrix, MetricKind,
    RankedList,
};
use drselect_core::ireval::evaluate_runs;
use drselect_core::metaeval::{evaluate_method, render_markdown, write_evaluation_csv, MethodEvaluation};
use drselect_core::perturb::perturb_file;
use drselect_core::retrieval::{sample_negatives, similarity, NegativeSample, Retriever, SimilarityKind};
use drselect_core::rng::{derive_seed, sha256_hex, stream};
use drselect_core::selectors::{
    binary_entropy_score, corpus_fd_score, extracted_fd_score, query_alteration_score,
    query_similarity_score, read_method_tables, select_indomain, write_method_tables, MethodKind,
    MethodScoreTable,
};
use drselect_core::Error;
use rand::seq::index;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Loaded, Variant};
use crate::error::{CliError, Result, TaskContext};

pub struct Workspace {
    pub cfg: Loaded,
    pub source: DatasetBundle,
    pub targets: Vec<DatasetBundle>,
}

/// Source-side rows shared by every target dataset of one model.
struct SourceSide {
    queries: Option<EmbeddingMatrix>,
    docs: Option<EmbeddingMatrix>,
}

impl Workspace {
    pub fn open(cfg: Loaded) -> Result<Self> {
        let c = &cfg.config;
        let source = DatasetBundle::open(&c.source.name, &cfg.resolve(&c.source.path), BundleKind::Source)?;
        let targets = c
            .datasets
            .iter()
            .map(|d| DatasetBundle::open(&d.name, &cfg.resolve(&d.path), BundleKind::Target))
            .collect::<drselect_core::Result<Vec<_>>>()?;
        Ok(Self { cfg, source, targets })
    }

    fn out(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.cfg.output_dir.join(rel)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out("manifest.json")
    }

    pub fn run_path(&self, model: &str, dataset: &str) -> PathBuf {
        self.out(format!("runs/{model}/{dataset}.run"))
    }

    pub fn negatives_path(&self, model: &str, dataset: &str) -> PathBuf {
        self.out(format!("negatives/{model}/{dataset}.tsv"))
    }

    pub fn perturbed_path(&self, dataset: &str, p: f64) -> PathBuf {
        self.out(format!("perturbed/{dataset}/p{p}.tsv"))
    }

    pub fn method_path(&self, label: &str) -> PathBuf {
        self.out(format!("methods/{label}.csv"))
    }

    pub fn truth_path(&self, metric: MetricKind) -> PathBuf {
        self.out(format!("truth/{metric}.csv"))
    }

    pub fn evaluation_path(&self) -> PathBuf {
        self.out("evaluation.csv")
    }

    pub fn report_path(&self) -> PathBuf {
        self.out("report.md")
    }

    fn models(&self) -> Vec<(String, SimilarityKind)> {
        self.cfg
            .registry
            .iter()
            .map(|m| (m.model_id.clone(), m.similarity))
            .collect()
    }

    fn pick_models(&self, model: Option<&str>) -> Result<Vec<(String, SimilarityKind)>> {
        let all = self.models();
        match model {
            None => Ok(all),
            Some(id) => all
                .into_iter()
                .find(|(m, _)| m == id)
                .map(|m| vec![m])
                .ok_or_else(|| CliError::config(format!("model {id} is not in the registry"))),
        }
    }

    fn pick_targets(&self, dataset: Option<&str>) -> Result<Vec<&DatasetBundle>> {
        match dataset {
            None => Ok(self.targets.iter().collect()),
            Some(name) => self
                .targets
                .iter()
                .find(|d| d.name == name)
                .map(|d| vec![d])
                .ok_or_else(|| CliError::config(format!("dataset {name} is not a configured target"))),
        }
    }

    fn metric(&self) -> MetricKind {
        MetricKind::NdcgAt(self.cfg.config.ndcg_k)
    }

    /// Check every input file the configured methods will need and write a
    /// manifest with their digests.
    pub fn ingest(&self) -> Result<PathBuf> {
        let qalter = self.cfg.enabled(MethodKind::Qalter);
        let ps = &self.cfg.config.methods.qalter.p;
        let trials = self.cfg.config.methods.qalter.trials;
        let per_model = self
            .models()
            .par_iter()
            .map(|(model, _)| {
                let mut files = Vec::new();
                let mut dim = None;
                let mut check = |m: drselect_core::Result<EmbeddingMatrix>, path: PathBuf, dataset: &str| {
                    let m = m.task("ingest", model, dataset)?;
                    match dim {
                        Some(d) if d != m.dim() => {
                            return Err(Error::DimensionMismatch { expected: d, got: m.dim() })
                                .task("ingest", model, dataset)
                        }
                        _ => dim = Some(m.dim()),
                    }
                    files.push(path);
                    Ok(())
                };
                let src = &self.source;
                check(src.load_queries(model), src.queries_ref(model).path, &src.name)?;
                check(src.load_docs(model), src.docs_ref(model).path, &src.name)?;
                for t in &self.targets {
                    check(t.load_queries(model), t.queries_ref(model).path, &t.name)?;
                    check(t.load_docs(model), t.docs_ref(model).path, &t.name)?;
                    if qalter {
                        for &p in ps {
                            check(t.load_perturbed(model, p, trials), t.perturbed_ref(model, p).path, &t.name)?;
                        }
                    }
                }
                Ok((model.clone(), dim.unwrap_or(0), files))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut datasets = Vec::new();
        for (bundle, role) in std::iter::once((&self.source, "source")).chain(self.targets.iter().map(|t| (t, "target"))) {
            let mut entry = json!({
                "name": bundle.name,
                "role": role,
                "queries": bundle.queries.len(),
                "docs": bundle.doc_ids.len(),
            });
            if role == "target" {
                let qrels = bundle.qrels()?;
                entry["judged_queries"] = json!(qrels.len());
            }
            datasets.push(entry);
        }
        let mut models = Vec::new();
        let mut files = Vec::new();
        for ((model, dim, paths), entry) in per_model.into_iter().zip(self.cfg.registry.iter()) {
            models.push(json!({"model_id": model, "similarity": entry.similarity.to_string(), "dim": dim}));
            for path in paths {
                let bytes = std::fs::read(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                let rel = path.strip_prefix(&self.cfg.base_dir).unwrap_or(&path);
                files.push(json!({"path": rel.to_string_lossy(), "sha256": sha256_hex(&bytes)}));
            }
        }
        let manifest = json!({
            "config_sha256": self.cfg.digest,
            "seed": self.cfg.config.seed,
            "run_depth": self.cfg.run_depth(),
            "models": models,
            "datasets": datasets,
            "files": files,
        });
        let path = self.manifest_path();
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON");
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Exhaustive top-k runs plus sampled negatives for each (model, target).
    pub fn retrieve(
        &self,
        model: Option<&str>,
        dataset: Option<&str>,
        k: Option<usize>,
        sim: Option<SimilarityKind>,
    ) -> Result<Vec<PathBuf>> {
        let depth = k.unwrap_or_else(|| self.cfg.run_depth());
        if depth == 0 {
            return Err(CliError::config("retrieval depth must be positive"));
        }
        let negatives = self.cfg.config.methods.negatives;
        let seed = self.cfg.config.seed;
        let tasks: Vec<((String, SimilarityKind), &DatasetBundle)> = self
            .pick_models(model)?
            .into_iter()
            .flat_map(|m| self.pick_targets(dataset).into_iter().flatten().map(move |d| (m.clone(), d)))
            .collect();
        if tasks.is_empty() {
            return Err(CliError::config("no datasets to retrieve from"));
        }
        let outputs = tasks
            .par_iter()
            .map(|((model, registry_kind), bundle)| {
                let kind = sim.unwrap_or(*registry_kind);
                let task = |e: drselect_core::Error| CliError::Core {
                    context: Some(format!("method retrieve, model {model}, dataset {}", bundle.name)),
                    source: e,
                };
                let queries = bundle.load_queries(model).map_err(task)?;
                let docs = bundle.load_docs(model).map_err(task)?;
                let runs = Retriever::new(&docs, kind)
                    .and_then(|r| r.retrieve_all(&queries, depth))
                    .map_err(task)?;
                let doc_rows: HashMap<&str, usize> =
                    docs.ids().iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
                let sample_seed = derive_seed(seed, &["negatives", model, &bundle.name]);
                let negs = runs
                    .iter()
                    .enumerate()
                    .map(|(qi, run)| {
                        sample_negatives(run.query_id(), run, docs.ids(), negatives, sample_seed, |d| {
                            similarity(queries.row(qi), docs.row(doc_rows[d]), kind)
                        })
                    })
                    .collect::<drselect_core::Result<Vec<_>>>()
                    .map_err(task)?;
                Ok((model.as_str(), bundle.name.as_str(), kind, runs, negs))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut written = Vec::new();
        for (model, dataset, kind, runs, negs) in outputs {
            let mut comments = self.cfg.provenance();
            comments.push(format!("model={model} dataset={dataset} similarity={kind} depth={depth}"));
            let run_path = self.run_path(model, dataset);
            drselect_core::corpusio::write_run(&run_path, &runs, &self.cfg.run_tag(), &comments)?;
            comments.push(format!("negatives={negatives}"));
            let neg_path = self.negatives_path(model, dataset);
            write_negatives(&neg_path, &negs, &comments)?;
            written.push(run_path);
            written.push(neg_path);
        }
        Ok(written)
    }

    /// Masked query files for the encoder, one per (target, p).
    pub fn perturb(
        &self,
        p: Option<f64>,
        seed: Option<u64>,
        trials: Option<usize>,
        dataset: Option<&str>,
    ) -> Result<Vec<PathBuf>> {
        let ps = match p {
            Some(p) => vec![p],
            None => self.cfg.config.methods.qalter.p.clone(),
        };
        let mut written = Vec::new();
        for bundle in self.pick_targets(dataset)? {
            for &p in &ps {
                let mut cfg = self.cfg.perturb_config(p)?;
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                if let Some(t) = trials {
                    cfg.trials = t;
                }
                cfg.validate().map_err(CliError::config)?;
                let comments = vec![
                    format!("config_sha256={}", self.cfg.digest),
                    format!("seed={}", cfg.seed),
                    format!("dataset={} p={} trials={} mask_token={}", bundle.name, p, cfg.trials, cfg.mask_token),
                ];
                let path = self.perturbed_path(&bundle.name, p);
                perturb_file(&bundle.queries, &cfg, &path, &comments)?;
                written.push(path);
            }
        }
        Ok(written)
    }

    fn pick_variants(&self, method: Option<&str>) -> Result<Vec<Variant>> {
        let all = self.cfg.variants();
        let Some(m) = method else {
            return Ok(all);
        };
        let picked: Vec<Variant> = all
            .into_iter()
            .filter(|v| v.label == m || v.kind.as_str() == m)
            .collect();
        if picked.is_empty() {
            return Err(CliError::config(format!("method {m} is not enabled in the config")));
        }
        Ok(picked)
    }

    /// Compute method score tables and write one CSV per method variant.
    pub fn select(&self, method: Option<&str>) -> Result<Vec<PathBuf>> {
        let variants = self.pick_variants(method)?;
        let registry = &self.cfg.registry;
        let seed = self.cfg.config.seed;
        let datasets: Vec<&DatasetBundle> = self.targets.iter().collect();
        let mut tables: BTreeMap<String, Vec<MethodScoreTable>> = BTreeMap::new();

        if variants.iter().any(|v| v.kind == MethodKind::Indomain) {
            let eff_path = self.cfg.resolve(&self.cfg.config.indomain_effectiveness);
            let eff = EffectivenessTable::read_csv(&eff_path, self.metric())?;
            let table = select_indomain(&eff, &self.source.name, registry)
                .task("indomain", "*", &self.source.name)?;
            tables.insert(
                "indomain".into(),
                datasets.iter().map(|d| table.retarget(&d.name)).collect(),
            );
        }

        let scored: Vec<&Variant> = variants.iter().filter(|v| v.kind != MethodKind::Indomain).collect();
        if !scored.is_empty() {
            let sample = SourceSample::draw(self, seed);
            let needs_src_q = scored.iter().any(|v| v.kind == MethodKind::Qsim);
            let needs_src_d = scored
                .iter()
                .any(|v| matches!(v.kind, MethodKind::FdCorpus | MethodKind::FdExtracted));
            let models = self.models();
            let sources = models
                .par_iter()
                .map(|(model, _)| {
                    let queries = needs_src_q
                        .then(|| self.source.load_queries(model).and_then(|m| take_rows(&m, &sample.queries)))
                        .transpose()
                        .task("source sample", model, &self.source.name)?;
                    let docs = needs_src_d
                        .then(|| self.source.load_docs(model).and_then(|m| take_rows(&m, &sample.docs)))
                        .transpose()
                        .task("source sample", model, &self.source.name)?;
                    Ok(SourceSide { queries, docs })
                })
                .collect::<Result<Vec<_>>>()?;

            let tasks: Vec<(usize, usize)> = (0..models.len())
                .flat_map(|m| (0..datasets.len()).map(move |d| (m, d)))
                .collect();
            let scores = tasks
                .par_iter()
                .map(|&(mi, di)| {
                    let (model, kind) = &models[mi];
                    self.score_task(model, *kind, datasets[di], &sources[mi], &scored)
                })
                .collect::<Result<Vec<_>>>()?;

            for (vi, v) in scored.iter().enumerate() {
                let params = self.params(v, &sample);
                let mut per_dataset = Vec::new();
                for (di, d) in datasets.iter().enumerate() {
                    let mut table = MethodScoreTable::new(&v.label, &d.name, params.clone())?;
                    for (mi, (model, _)) in models.iter().enumerate() {
                        table.insert(model, scores[mi * datasets.len() + di][vi])?;
                    }
                    per_dataset.push(table);
                }
                tables.insert(v.label.clone(), per_dataset);
            }
        }

        let mut written = Vec::new();
        for v in &variants {
            let path = self.method_path(&v.label);
            let mut comments = self.cfg.provenance();
            comments.push(format!("method={}", v.label));
            write_method_tables(&path, &tables[&v.label], registry, &comments)?;
            written.push(path);
        }
        Ok(written)
    }

    fn params(&self, v: &Variant, sample: &SourceSample) -> Map<String, Value> {
        let m = &self.cfg.config.methods;
        let mut p = Map::new();
        let seed = self.cfg.config.seed;
        match v.kind {
            MethodKind::Indomain => {}
            MethodKind::Qsim => {
                p.insert("source_dataset".into(), json!(self.source.name));
                p.insert("source_queries".into(), json!(sample.queries.len()));
                p.insert("seed".into(), json!(seed));
            }
            MethodKind::FdCorpus | MethodKind::FdExtracted => {
                if v.kind == MethodKind::FdExtracted {
                    p.insert("k".into(), json!(m.extracted_k));
                }
                p.insert("source_dataset".into(), json!(self.source.name));
                p.insert("source_docs".into(), json!(sample.docs.len()));
                p.insert("seed".into(), json!(seed));
            }
            MethodKind::Entropy => {
                p.insert("cutoff".into(), json!(entropy_cutoff(&v.label)));
                p.insert("negatives".into(), json!(m.negatives));
                p.insert("seed".into(), json!(seed));
            }
            MethodKind::Qalter => {
                p.insert("p".into(), json!(qalter_p(&v.label)));
                p.insert("trials".into(), json!(m.qalter.trials));
                p.insert("k".into(), json!(m.qalter.k));
                p.insert("seed".into(), json!(seed));
                p.insert("mask_token".into(), json!(m.qalter.mask_token));
            }
        }
        p
    }

    /// Scores of one (model, dataset) pair for each variant, in order.
    fn score_task(
        &self,
        model: &str,
        kind: SimilarityKind,
        bundle: &DatasetBundle,
        source: &SourceSide,
        variants: &[&Variant],
    ) -> Result<Vec<f64>> {
        let d = bundle.name.as_str();
        let has = |k: MethodKind| variants.iter().any(|v| v.kind == k);
        let need_q = has(MethodKind::Qsim) || has(MethodKind::FdExtracted) || has(MethodKind::Qalter);
        let need_d = has(MethodKind::FdCorpus) || has(MethodKind::FdExtracted) || has(MethodKind::Qalter);
        let need_runs = has(MethodKind::Entropy) || has(MethodKind::Qalter);
        let first = |k: MethodKind| variants.iter().find(|v| v.kind == k).map(|v| v.label.clone()).unwrap_or_default();

        let queries = need_q.then(|| bundle.load_queries(model)).transpose().task("load", model, d)?;
        let docs = need_d.then(|| bundle.load_docs(model)).transpose().task("load", model, d)?;
        let runs = need_runs
            .then(|| read_run(&self.run_path(model, d), kind))
            .transpose()
            .task("retrieve", model, d)?;
        let negatives = has(MethodKind::Entropy)
            .then(|| read_negatives(&self.negatives_path(model, d)))
            .transpose()
            .task(&first(MethodKind::Entropy), model, d)?;

        let mut out = Vec::with_capacity(variants.len());
        for v in variants {
            let label = v.label.as_str();
            let value = match v.kind {
                MethodKind::Indomain => unreachable!("in-domain scores come from the effectiveness table"),
                MethodKind::Qsim => query_similarity_score(expect(&source.queries), expect(&queries)).map(|r| r.0),
                MethodKind::FdCorpus => corpus_fd_score(expect(&source.docs), expect(&docs)),
                MethodKind::FdExtracted => extracted_fd_score(
                    kind,
                    expect(&queries),
                    expect(&source.docs),
                    expect(&docs),
                    self.cfg.config.methods.extracted_k,
                )
                .map(|r| r.0),
                MethodKind::Entropy => {
                    let cutoff = entropy_cutoff(label);
                    let runs = expect(&runs);
                    check_depth(runs, cutoff, bundle.doc_ids.len())
                        .and_then(|_| binary_entropy_score(runs, expect(&negatives), cutoff))
                        .map(|r| r.0)
                }
                MethodKind::Qalter => {
                    let qa = &self.cfg.config.methods.qalter;
                    let runs = expect(&runs);
                    check_depth(runs, qa.k, bundle.doc_ids.len())
                        .and_then(|_| bundle.load_perturbed(model, qalter_p(label), qa.trials))
                        .and_then(|perturbed| {
                            let top: Vec<RankedList> = runs.iter().map(|r| r.truncated(qa.k)).collect();
                            query_alteration_score(&top, expect(&queries), &perturbed, expect(&docs), kind)
                        })
                        .map(|r| r.0)
                }
            };
            out.push(value.task(label, model, d)?);
        }
        Ok(out)
    }

    /// Ground-truth effectiveness of every model on every target, from the
    /// stored runs and the qrels.
    pub fn truth(&self, metric: Option<MetricKind>) -> Result<PathBuf> {
        let metric = metric.unwrap_or_else(|| self.metric());
        let models = self.models();
        let values = self
            .targets
            .par_iter()
            .map(|bundle| {
                let qrels = bundle.qrels().task("truth", "*", &bundle.name)?;
                models
                    .iter()
                    .map(|(model, kind)| {
                        let runs = read_run(&self.run_path(model, &bundle.name), *kind)
                            .task("truth", model, &bundle.name)?;
                        let report = evaluate_runs(&runs, &qrels, metric.cutoff()).task("truth", model, &bundle.name)?;
                        Ok((model.as_str(), bundle.name.as_str(), report.mean))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = EffectivenessTable::new(metric);
        for (model, dataset, value) in values.into_iter().flatten() {
            table.insert(model, dataset, value)?;
        }
        let path = self.truth_path(metric);
        let mut comments = self.cfg.provenance();
        comments.push(format!("metric={metric}"));
        table.write_csv(&path, &self.cfg.registry, &comments)?;
        Ok(path)
    }

    fn evaluations(&self) -> Result<Vec<MethodEvaluation>> {
        let truth = EffectivenessTable::read_csv(&self.truth_path(self.metric()), self.metric())?;
        let names: Vec<String> = self.targets.iter().map(|t| t.name.clone()).collect();
        self.cfg
            .variants()
            .iter()
            .map(|v| {
                let tables: Vec<MethodScoreTable> = read_method_tables(&self.method_path(&v.label))?
                    .into_iter()
                    .filter(|t| t.label == v.label && names.contains(&t.dataset))
                    .collect();
                evaluate_method(&tables, &truth, &self.cfg.registry, &names).task(&v.label, "*", "*")
            })
            .collect()
    }

    pub fn evaluate(&self) -> Result<PathBuf> {
        let evals = self.evaluations()?;
        let path = self.evaluation_path();
        write_evaluation_csv(&path, &evals, &self.cfg.provenance())?;
        Ok(path)
    }

    pub fn report(&self) -> Result<PathBuf> {
        let evals = self.evaluations()?;
        let path = self.report_path();
        write_file(&path, render_markdown(&evals, &self.cfg.provenance()).as_bytes())?;
        Ok(path)
    }

    /// Every stage in order.
    pub fn run(&self) -> Result<Vec<PathBuf>> {
        let mut written = vec![self.ingest()?];
        written.extend(self.retrieve(None, None, None, None)?);
        if self.cfg.enabled(MethodKind::Qalter) {
            written.extend(self.perturb(None, None, None, None)?);
        }
        written.extend(self.select(None)?);
        written.push(self.truth(None)?);
        written.push(self.evaluate()?);
        written.push(self.report()?);
        Ok(written)
    }
}

/// Ids of the source queries and documents used by the source-side methods.
struct SourceSample {
    queries: Vec<String>,
    docs: Vec<String>,
}

impl SourceSample {
    fn draw(ws: &Workspace, seed: u64) -> Self {
        let sizes = &ws.cfg.config.source_sample;
        let qids: Vec<String> = ws.source.queries.iter().map(|q| q.id.clone()).collect();
        Self {
            queries: sample_ids(&qids, sizes.queries, seed, "queries"),
            docs: sample_ids(&ws.source.doc_ids, sizes.docs, seed, "docs"),
        }
    }
}

fn sample_ids(ids: &[String], size: usize, seed: u64, label: &str) -> Vec<String> {
    if size >= ids.len() {
        return ids.to_vec();
    }
    let mut rng = stream(seed, &["source_sample", label]);
    let mut picks = index::sample(&mut rng, ids.len(), size).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| ids[i].clone()).collect()
}

fn take_rows(m: &EmbeddingMatrix, ids: &[String]) -> drselect_core::Result<EmbeddingMatrix> {
    let rows: HashMap<&str, usize> = m.ids().iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
    let indices = ids
        .iter()
        .map(|id| rows.get(id.as_str()).copied().ok_or_else(|| Error::Missing(format!("embedding row for {id}"))))
        .collect::<drselect_core::Result<Vec<_>>>()?;
    m.select(&indices)
}

fn expect<T>(x: &Option<T>) -> &T {
    x.as_ref().expect("inputs are loaded for every requested method")
}

fn entropy_cutoff(label: &str) -> usize {
    label.split_once('@').and_then(|(_, c)| c.parse().ok()).expect("entropy labels carry a cutoff")
}

fn qalter_p(label: &str) -> f64 {
    label
        .split_once("@p")
        .and_then(|(_, p)| p.parse().ok())
        .expect("query alteration labels carry p")
}

fn check_depth(runs: &[RankedList], needed: usize, corpus: usize) -> drselect_core::Result<()> {
    let needed = needed.min(corpus);
    match runs.iter().find(|r| r.len() < needed) {
        Some(r) => Err(Error::Invalid(format!(
            "run for query {} has {} documents, {} needed; retrieve deeper",
            r.query_id(),
            r.len(),
            needed
        ))),
        None => Ok(()),
    }
}

/// `qid<TAB>doc<TAB>score` per sampled negative.
pub fn write_negatives(path: &Path, samples: &[NegativeSample], comments: &[String]) -> drselect_core::Result<()> {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    for s in samples {
        for (d, score) in s.doc_ids.iter().zip(&s.scores) {
            out.push_str(&format!("{}\t{d}\t{score}\n", s.query_id));
        }
    }
    write_file(path, out.as_bytes())
}

pub fn read_negatives(path: &Path) -> drselect_core::Result<BTreeMap<String, NegativeSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_owned(), source: e })?;
    let mut grouped: BTreeMap<String, (Vec<String>, Vec<f64>)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::Parse { path: path.to_owned(), line: Some(i + 1), message: msg.to_owned() };
        let mut fields = line.split('\t');
        let (Some(q), Some(d), Some(s), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
            return Err(bad("expected qid<TAB>doc<TAB>score"));
        };
        let score: f64 = s.parse().map_err(|_| bad("score is not a number"))?;
        let entry = grouped.entry(q.to_owned()).or_default();
        entry.0.push(d.to_owned());
        entry.1.push(score);
    }
    grouped
        .into_iter()
        .map(|(q, (ids, scores))| Ok((q.clone(), NegativeSample::new(q, ids, scores)?)))
        .collect()
}
