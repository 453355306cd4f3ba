use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/corpus.csv")
}

fn sectorzero(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sectorzero"))
        .args(args)
        .env_remove("SECTORZERO_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sectorzero(&[
        "run",
        "--corpus",
        path_str(&golden_corpus()),
        "--labels",
        "enriched",
        "--out",
        path_str(tmp.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("accuracy"));
    for name in [
        "predictions.jsonl",
        "report.txt",
        "report.csv",
        "report.json",
        "confusion.svg",
        "manifest.json",
    ] {
        assert!(tmp.path().join(name).is_file(), "{name}");
    }
}

#[test]
fn synthetic_generation_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = |dir: &str| {
        let out = tmp.path().join(dir);
        let o = sectorzero(&[
            "gen-synthetic",
            "--labels",
            "enriched",
            "--per-class",
            "2",
            "--seed",
            "7",
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code(&o), 0);
        std::fs::read(out.join("synthetic_corpus.csv")).unwrap()
    };
    let a = gen("a");
    assert_eq!(a, gen("b"));
    assert_eq!(a, std::fs::read(golden_corpus()).unwrap());
}

#[test]
fn summary_lists_every_sector() {
    let out = sectorzero(&["summary", "--corpus", path_str(&golden_corpus())]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Real Estate"));
    assert!(text.contains("22"));
}

#[test]
fn enrich_writes_rankings_and_candidates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sectorzero(&[
        "enrich",
        "--corpus",
        path_str(&golden_corpus()),
        "--top-k",
        "5",
        "--out",
        path_str(tmp.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("rankings.csv")).unwrap();
    assert!(csv.starts_with("gics_name,rank,term,score"));
    let candidates: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("label_candidates.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(candidates.as_array().unwrap().len(), 11);
}

#[test]
fn staged_subcommands_compose() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = golden_corpus();
    let base = [
        "--corpus",
        path_str(&corpus),
        "--labels",
        "enriched",
        "--out",
    ];
    let classify = sectorzero(&[&["classify"], &base[..], &[path_str(tmp.path())]].concat());
    assert_eq!(code(&classify), 0);
    let evaluate = sectorzero(&[&["evaluate"], &base[..], &[path_str(tmp.path())]].concat());
    assert_eq!(code(&evaluate), 0);
    let report = std::fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert_eq!(String::from_utf8(evaluate.stdout).unwrap(), report);
}

#[test]
fn bad_configuration_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = golden_corpus();
    let out_dir = tmp.path().join("out");
    let zero_batch = sectorzero(&[
        "classify",
        "--corpus",
        path_str(&corpus),
        "--batch-size",
        "0",
        "--out",
        path_str(&out_dir),
    ]);
    assert_eq!(code(&zero_batch), 2);

    let missing = sectorzero(&["classify", "--corpus", "no/such/file.csv"]);
    assert_eq!(code(&missing), 2);

    let config = tmp.path().join("config.json");
    std::fs::write(&config, r#"{"corpus": "x.csv", "unknown_key": 1}"#).unwrap();
    let unknown = sectorzero(&["run", "--config", path_str(&config)]);
    assert_eq!(code(&unknown), 2);

    let remote_without_endpoint = sectorzero(&[
        "classify",
        "--corpus",
        path_str(&corpus),
        "--backend",
        "remote",
    ]);
    assert_eq!(code(&remote_without_endpoint), 2);
    assert!(!out_dir.exists());
}

#[test]
fn unreachable_backend_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "corpus": golden_corpus(),
            "backend": "remote",
            "endpoint": format!("http://127.0.0.1:{port}"),
            "retry_backoff_ms": 5,
            "out": tmp.path().join("out"),
        })
        .to_string(),
    )
    .unwrap();
    let out = sectorzero(&["classify", "--config", path_str(&config)]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"failed\""));
}
