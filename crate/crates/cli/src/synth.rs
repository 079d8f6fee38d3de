//! A small fabricated benchmark: three toy encoders, a source collection
//! and two topic-shifted targets, with every file the pipeline reads.
//!
//! Texts are bags of made-up words. Each word has a latent vector near its
//! topic centroid; a toy model embeds a word as that vector plus noise whose
//! size depends on the model and the topic, and embeds a text as the mean of
//! its words. Models therefore differ in which topics they handle well, and
//! the ranking of models changes from one collection to another.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use drselect_core::corpusio::{
    write_embeddings, write_file, write_queries_tsv, EffectivenessTable, EmbeddingMatrix, MetricKind,
    ModelEntry, ModelRegistry, Qrels, Query,
};
use drselect_core::ireval::evaluate_runs;
use drselect_core::perturb::{perturb_queries, PerturbConfig};
use drselect_core::retrieval::{Retriever, SimilarityKind};
use drselect_core::rng::stream;
use drselect_core::Result;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

const DIM: usize = 16;
const TOPIC_WORDS: usize = 40;
const COMMON_WORDS: usize = 200;
const MASK: &str = "[MASK]";
const MASK_PS: [f64; 3] = [0.1, 0.2, 0.3];
const TRIALS: usize = 3;

struct ToyModel {
    id: &'static str,
    similarity: SimilarityKind,
    /// Noise scale is `base + amp * sin(phase + 0.4 * topic)`.
    base: f64,
    amp: f64,
    phase: f64,
}

const MODELS: [ToyModel; 3] = [
    ToyModel { id: "toy-dot-a", similarity: SimilarityKind::Dot, base: 0.45, amp: 0.35, phase: 0.0 },
    ToyModel { id: "toy-cos-b", similarity: SimilarityKind::Cosine, base: 0.5, amp: 0.4, phase: 2.1 },
    ToyModel { id: "toy-dot-c", similarity: SimilarityKind::Dot, base: 0.55, amp: 0.45, phase: 4.2 },
];

struct Collection {
    dir: &'static str,
    name: &'static str,
    topics: Range<usize>,
    docs: usize,
    queries: usize,
}

const SOURCE: Collection = Collection { dir: "source", name: "synth-source", topics: 0..16, docs: 1500, queries: 300 };
const TARGETS: [Collection; 2] = [
    Collection { dir: "alpha", name: "synth-alpha", topics: 8..22, docs: 1200, queries: 120 },
    Collection { dir: "beta", name: "synth-beta", topics: 18..30, docs: 1250, queries: 150 },
];

fn topic_word(t: usize, j: usize) -> String {
    format!("t{t:02}w{j:02}")
}

fn common_word(j: usize) -> String {
    format!("c{j:03}")
}

fn topic_of(word: &str) -> Option<usize> {
    word.strip_prefix('t')?.get(..2)?.parse().ok()
}

fn normal_vec(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Shared latent word vectors.
fn latent_vectors(seed: u64, topics: usize) -> BTreeMap<String, Vec<f64>> {
    let mut out = BTreeMap::new();
    for t in 0..topics {
        let centroid = normal_vec(&mut stream(seed, &["centroid", &t.to_string()]));
        for j in 0..TOPIC_WORDS {
            let w = topic_word(t, j);
            let g = normal_vec(&mut stream(seed, &["latent", &w]));
            out.insert(w, centroid.iter().zip(g).map(|(c, g)| 0.5 * c + g).collect());
        }
    }
    for j in 0..COMMON_WORDS {
        let w = common_word(j);
        let g = normal_vec(&mut stream(seed, &["latent", &w]));
        out.insert(w, g.into_iter().map(|g| 0.3 * g).collect());
    }
    out
}

struct Encoder {
    similarity: SimilarityKind,
    words: BTreeMap<String, Vec<f64>>,
}

impl Encoder {
    fn new(model: &ToyModel, latent: &BTreeMap<String, Vec<f64>>, seed: u64) -> Self {
        let mut words = BTreeMap::new();
        for (w, base) in latent {
            let sigma = match topic_of(w) {
                Some(t) => model.base + model.amp * (model.phase + 0.4 * t as f64).sin(),
                None => model.base,
            };
            let noise = normal_vec(&mut stream(seed, &["noise", model.id, w]));
            words.insert(w.clone(), base.iter().zip(noise).map(|(b, n)| b + sigma * n).collect());
        }
        words.insert(MASK.into(), normal_vec(&mut stream(seed, &["noise", model.id, MASK])));
        Self { similarity: model.similarity, words }
    }

    fn encode(&self, text: &str) -> Vec<f32> {
        let mut acc = [0.0f64; DIM];
        let tokens: Vec<&str> = text.split_whitespace().collect();
        for t in &tokens {
            let v = &self.words[*t];
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        // dot models get a mild preference for longer texts
        let length = match self.similarity {
            SimilarityKind::Dot => 1.0 + 0.01 * tokens.len() as f64,
            SimilarityKind::Cosine => 1.0,
        };
        acc.iter().map(|a| (a / norm * length) as f32).collect()
    }

    fn matrix<'a>(&self, items: impl Iterator<Item = (&'a str, &'a str)>) -> Result<EmbeddingMatrix> {
        let (ids, rows): (Vec<String>, Vec<Vec<f32>>) =
            items.map(|(id, text)| (id.to_owned(), self.encode(text))).unzip();
        EmbeddingMatrix::from_rows(ids, rows)
    }
}

struct Texts {
    docs: Vec<(String, String)>,
    queries: Vec<Query>,
    qrels: Vec<(String, String, u32)>,
}

fn fabricate(c: &Collection, seed: u64) -> Texts {
    let mut rng = stream(seed, &["texts", c.name]);
    let prefix = &c.dir[..1];
    let mut docs = Vec::with_capacity(c.docs);
    let mut doc_topic = Vec::with_capacity(c.docs);
    for i in 0..c.docs {
        let t = rng.random_range(c.topics.clone());
        let len = rng.random_range(12..30);
        let words: Vec<String> = (0..len)
            .map(|_| {
                if rng.random_bool(0.6) {
                    topic_word(t, rng.random_range(0..TOPIC_WORDS))
                } else {
                    common_word(rng.random_range(0..COMMON_WORDS))
                }
            })
            .collect();
        docs.push((format!("{prefix}d{i:05}"), words.join(" ")));
        doc_topic.push(t);
    }
    let mut queries = Vec::with_capacity(c.queries);
    let mut qrels = Vec::new();
    for i in 0..c.queries {
        let qid = format!("{prefix}q{i:04}");
        let seed_doc = rng.random_range(0..c.docs);
        let t = doc_topic[seed_doc];
        let doc_words: Vec<&str> = docs[seed_doc].1.split(' ').filter(|w| topic_of(w) == Some(t)).collect();
        let len = rng.random_range(4..9);
        let words: Vec<String> = (0..len)
            .map(|_| {
                if !doc_words.is_empty() && rng.random_bool(0.8) {
                    doc_words[rng.random_range(0..doc_words.len())].to_owned()
                } else {
                    common_word(rng.random_range(0..COMMON_WORDS))
                }
            })
            .collect();
        queries.push(Query { id: qid.clone(), text: words.join(" ") });
        qrels.push((qid.clone(), docs[seed_doc].0.clone(), 2));
        let same_topic: Vec<usize> = (0..c.docs).filter(|&d| d != seed_doc && doc_topic[d] == t).collect();
        if !same_topic.is_empty() {
            for k in index::sample(&mut rng, same_topic.len(), same_topic.len().min(2)) {
                qrels.push((qid.clone(), docs[same_topic[k]].0.clone(), 1));
            }
        }
    }
    Texts { docs, queries, qrels }
}

fn write_qrels(path: &Path, entries: &[(String, String, u32)]) -> Result<()> {
    let mut out = String::new();
    for (q, d, g) in entries {
        out.push_str(&format!("{q} 0 {d} {g}\n"));
    }
    write_file(path, out.as_bytes())
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Write the benchmark under `dir`, config at `dir/drselect.json`.
pub fn generate(dir: &Path, seed: u64) -> Result<PathBuf> {
    let topics = TARGETS.iter().map(|c| c.topics.end).chain([SOURCE.topics.end]).max().unwrap_or(0);
    let latent = latent_vectors(seed, topics);
    let encoders: Vec<Encoder> = MODELS.iter().map(|m| Encoder::new(m, &latent, seed)).collect();
    let registry = ModelRegistry::new(
        MODELS
            .iter()
            .map(|m| ModelEntry {
                model_id: m.id.into(),
                similarity: m.similarity,
                display_name: m.id.into(),
            })
            .collect(),
    )?;
    let comments = vec![format!("synthetic benchmark, seed={seed}")];
    let mut indomain = EffectivenessTable::new(MetricKind::NdcgAt(10));

    for (c, is_source) in std::iter::once((&SOURCE, true)).chain(TARGETS.iter().map(|t| (t, false))) {
        let root = dir.join(c.dir);
        let texts = fabricate(c, seed);
        write_queries_tsv(&root.join("queries.tsv"), &texts.queries, &comments)?;
        write_lines(&root.join("docs.ids"), texts.docs.iter().map(|(id, _)| id.clone()))?;
        write_lines(&root.join("docs.tsv"), texts.docs.iter().map(|(id, t)| format!("{id}\t{t}")))?;
        write_qrels(&root.join("qrels.txt"), &texts.qrels)?;
        let perturbed: Vec<(f64, Vec<Query>)> = if is_source {
            Vec::new()
        } else {
            MASK_PS
                .iter()
                .map(|&p| Ok((p, perturb_queries(&texts.queries, &PerturbConfig::new(p, seed, TRIALS)?)?)))
                .collect::<Result<_>>()?
        };
        for (model, enc) in MODELS.iter().zip(&encoders) {
            let emb = root.join("emb").join(model.id);
            let q = enc.matrix(texts.queries.iter().map(|q| (q.id.as_str(), q.text.as_str())))?;
            let d = enc.matrix(texts.docs.iter().map(|(id, t)| (id.as_str(), t.as_str())))?;
            write_embeddings(&q, &emb.join("queries.emb"))?;
            write_embeddings(&d, &emb.join("docs.emb"))?;
            for (p, pq) in &perturbed {
                let m = enc.matrix(pq.iter().map(|q| (q.id.as_str(), q.text.as_str())))?;
                write_embeddings(&m, &emb.join(format!("perturbed_p{p}.emb")))?;
            }
            if is_source {
                let runs = Retriever::new(&d, model.similarity)?.retrieve_all(&q, 10)?;
                let qrels = Qrels::from_entries(texts.qrels.iter().cloned())?;
                indomain.insert(model.id, c.name, evaluate_runs(&runs, &qrels, 10)?.mean)?;
            }
        }
    }
    indomain.write_csv(&dir.join("indomain.csv"), &registry, &comments)?;

    let registry_json = json!(MODELS
        .iter()
        .map(|m| json!({"model_id": m.id, "similarity": m.similarity.to_string(), "display_name": m.id}))
        .collect::<Vec<_>>());
    let config = json!({
        "registry": "registry.json",
        "source": {"name": SOURCE.name, "path": SOURCE.dir},
        "datasets": TARGETS.iter().map(|t| json!({"name": t.name, "path": t.dir})).collect::<Vec<_>>(),
        "indomain_effectiveness": "indomain.csv",
        "seed": seed,
        "source_sample": {"docs": 1000, "queries": 200},
        "methods": {
            "entropy_cutoffs": [10, 1000],
            "negatives": 100,
            "extracted_k": 100,
            "qalter": {"p": MASK_PS, "trials": TRIALS, "k": 10},
        },
        "ndcg_k": 10,
        "output_dir": "out",
    });
    let pretty = |v: &serde_json::Value| format!("{}\n", serde_json::to_string_pretty(v).expect("plain JSON"));
    write_file(&dir.join("registry.json"), pretty(&registry_json).as_bytes())?;
    let config_path = dir.join("drselect.json");
    write_file(&config_path, pretty(&config).as_bytes())?;
    Ok(config_path)
}
