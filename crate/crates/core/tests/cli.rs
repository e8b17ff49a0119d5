use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mstopics(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mstopics"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Small bundled corpus and a fast run configuration.
fn corpus(dir: &Path) -> String {
    let out = mstopics(&["bench", "generate", "--dir", dir.to_str().unwrap(), "--docs", "90"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let conf = dir.join("pipeline.conf");
    let mut text = fs::read_to_string(&conf).unwrap();
    text.push_str("grid = log:0.01:1000:24\nn_runs = 12\nn_top = 6\nmin_plateau = 3\n");
    fs::write(&conf, text).unwrap();
    conf.to_str().unwrap().to_string()
}

fn run_all(conf: &str, extra: &[&str]) {
    for stage in ["build-graph", "scan", "select", "evaluate", "summarize"] {
        let mut args = vec![stage, "--config", conf];
        args.extend_from_slice(extra);
        let out = mstopics(&args);
        assert_eq!(code(&out), 0, "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn full_pipeline_on_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let conf = corpus(dir.path());
    run_all(&conf, &[]);
    let out = dir.path().join("out");

    let report = fs::read_to_string(out.join("select/report.tsv")).unwrap();
    let scales = report.lines().filter(|l| !l.starts_with('#') && !l.starts_with("rank")).count();
    assert!(scales >= 1, "{report}");

    for level in ["level1", "level2"] {
        let curve = fs::read_to_string(out.join("evaluate").join(level).join("uncertainty.tsv")).unwrap();
        let rows = curve.lines().filter(|l| !l.starts_with('#') && !l.starts_with("rank")).count();
        assert_eq!(rows, scales);
        assert!(out.join("evaluate").join(level).join("scale_00.zscores.tsv").exists());
    }
    assert!(out.join("summarize/scale_00/cluster_000.tsv").exists());

    // Provenance line on every artifact.
    for (path, bytes) in snapshot(&out) {
        if path.extension().is_some_and(|e| e == "tsv") {
            let text = String::from_utf8(bytes).unwrap();
            let first = text.lines().next().unwrap_or("");
            assert!(first.starts_with("# mstopics stage=") && first.contains("config_hash=") && first.contains("seed="), "{}", path.display());
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let conf = corpus(dir.path());
    run_all(&conf, &[]);
    let first = snapshot(&dir.path().join("out"));
    run_all(&conf, &["--workers", "2"]);
    let second = snapshot(&dir.path().join("out"));
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (path, bytes) in &first {
        assert!(second[path] == *bytes, "{} differs", path.display());
    }
}

#[test]
fn oversized_k_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = corpus(dir.path());
    let out = mstopics(&["build-graph", "--config", &conf, "--k", "90"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("k must lie in"));
}

#[test]
fn missing_upstream_artifact_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nothing");
    for stage in ["scan", "select"] {
        let out = mstopics(&[stage, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 3, "{stage}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("graph.meta"));
    }
}

#[test]
fn evaluate_refuses_stale_artifacts_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let conf = corpus(dir.path());
    for stage in ["build-graph", "scan", "select"] {
        assert_eq!(code(&mstopics(&[stage, "--config", &conf])), 0);
    }
    let stale = mstopics(&["evaluate", "--config", &conf, "--seed", "99"]);
    assert_eq!(code(&stale), 2);
    assert!(String::from_utf8_lossy(&stale.stderr).contains("--force"));
    let forced = mstopics(&["evaluate", "--config", &conf, "--seed", "99", "--force"]);
    assert_eq!(code(&forced), 0, "{}", String::from_utf8_lossy(&forced.stderr));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "k = 5\ncolour = blue\n").unwrap();
    let out = mstopics(&["build-graph", "--config", conf.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let out = mstopics(&["scan", "--grid", "cubic:1:2"]);
    assert_eq!(code(&out), 2);
    let out = mstopics(&["no-such-command"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn zero_norm_embedding_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let e = dir.path().join("e.tsv");
    fs::write(&e, "id\tx\ty\na\t1\t0\nb\t0\t0\nc\t0\t1\n").unwrap();
    let out = mstopics(&["build-graph", "--embeddings", e.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero-norm vector at row"));
}
