use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drselect_core::corpusio::{read_embeddings, write_embeddings, EmbeddingMatrix};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini")
}

fn drselect(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drselect"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn copy_fixture(to: &Path) -> PathBuf {
    for (rel, bytes) in snapshot(&fixture()) {
        if rel.starts_with("out") {
            continue;
        }
        let dest = to.join(&rel);
        std::fs::create_dir_all(dest.parent().unwrap()).unwrap();
        std::fs::write(dest, bytes).unwrap();
    }
    to.join("drselect.json")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_run_is_complete_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let config = fixture().join("drselect.json");
    let first = drselect(&config, &a, &["run"]);
    assert!(first.status.success(), "{}", stderr(&first));

    let eval = std::fs::read_to_string(a.join("evaluation.csv")).unwrap();
    let rows: Vec<&str> = eval.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    // 9 method variants, 2 datasets plus an average each
    assert_eq!(rows.len(), 9 * 3);
    for label in ["indomain", "qsim", "fd_corpus", "fd_extracted@100", "entropy@10", "entropy@1000", "qalter@p0.1", "qalter@p0.2", "qalter@p0.3"] {
        for dataset in ["synth-alpha", "synth-beta", "average"] {
            assert!(rows.iter().any(|r| r.starts_with(&format!("{label},{dataset},"))), "{label} {dataset}");
        }
    }
    let report = std::fs::read_to_string(a.join("report.md")).unwrap();
    assert!(report.contains("Binary Entropy 1000 (5)"));

    let threaded = Command::new(env!("CARGO_BIN_EXE_drselect"))
        .env("DRSELECT_THREADS", "1")
        .args(["--config", config.to_str().unwrap(), "--out", b.to_str().unwrap(), "run"])
        .output()
        .unwrap();
    assert!(threaded.status.success(), "{}", stderr(&threaded));
    assert_eq!(snapshot(&a), snapshot(&b));

    let again = drselect(&config, &a, &["run"]);
    assert!(again.status.success());
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn stages_compose_to_the_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture().join("drselect.json");
    let whole = tmp.path().join("whole");
    assert!(drselect(&config, &whole, &["run"]).status.success());

    let staged = tmp.path().join("staged");
    for args in [
        vec!["ingest"],
        vec!["retrieve"],
        vec!["perturb"],
        vec!["select", "--method", "indomain"],
        vec!["select", "--method", "qsim"],
        vec!["select", "--method", "fd_corpus"],
        vec!["select", "--method", "fd_extracted"],
        vec!["select", "--method", "entropy@10"],
        vec!["select", "--method", "entropy@1000"],
        vec!["select", "--method", "qalter"],
        vec!["truth", "--metric", "ndcg@10"],
        vec!["evaluate"],
        vec!["report"],
    ] {
        let o = drselect(&config, &staged, &args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(snapshot(&whole), snapshot(&staged));
}

#[test]
fn every_output_names_config_digest_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture().join("drselect.json");
    let out = tmp.path().join("out");
    assert!(drselect(&config, &out, &["run"]).status.success());
    let digest = drselect_core::rng::sha256_hex(&std::fs::read(&config).unwrap());
    for (rel, bytes) in snapshot(&out) {
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains(&digest), "{} lacks the config digest", rel.display());
        assert!(text.contains("20240611"), "{} lacks the seed", rel.display());
    }
}

#[test]
fn missing_embedding_file_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = copy_fixture(tmp.path());
    let gone = tmp.path().join("beta/emb/toy-cos-b/docs.emb");
    std::fs::remove_file(&gone).unwrap();
    let o = drselect(&config, &tmp.path().join("out"), &["run"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(gone.to_str().unwrap()), "{}", stderr(&o));
}

#[test]
fn bad_configs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = copy_fixture(tmp.path());
    let original = std::fs::read_to_string(&config).unwrap();
    let out = tmp.path().join("out");

    std::fs::write(&config, original.replace("\"seed\": 20240611,", "")).unwrap();
    let o = drselect(&config, &out, &["ingest"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("seed"));

    std::fs::write(&config, original.replace("\"path\": \"beta\"", "\"path\": \"nowhere\"")).unwrap();
    assert_eq!(drselect(&config, &out, &["ingest"]).status.code(), Some(2));

    std::fs::write(&config, original.replace("0.3\n", "1.3\n")).unwrap();
    assert_eq!(drselect(&config, &out, &["ingest"]).status.code(), Some(2));

    std::fs::write(&config, &original).unwrap();
    let o = drselect(&config, &out, &["select", "--method", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_names_the_task() {
    let tmp = tempfile::tempdir().unwrap();
    let config = copy_fixture(tmp.path());
    let path = tmp.path().join("alpha/emb/toy-cos-b/queries.emb");
    let m = read_embeddings(&path).unwrap();
    let mut rows = m.as_slice().to_vec();
    rows[..m.dim()].iter_mut().for_each(|v| *v = 0.0);
    write_embeddings(&EmbeddingMatrix::new(m.ids().to_vec(), m.dim(), rows).unwrap(), &path).unwrap();

    let o = drselect(&config, &tmp.path().join("out"), &["retrieve"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let msg = stderr(&o);
    assert!(msg.contains("model toy-cos-b") && msg.contains("dataset synth-alpha"), "{msg}");
}

#[test]
fn shallow_runs_are_rejected_for_deep_cutoffs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture().join("drselect.json");
    let out = tmp.path().join("out");
    assert!(drselect(&config, &out, &["retrieve", "--k", "10"]).status.success());
    let o = drselect(&config, &out, &["select", "--method", "entropy@1000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("entropy@1000"), "{}", stderr(&o));
    assert!(drselect(&config, &out, &["select", "--method", "entropy@10"]).status.success());
}
