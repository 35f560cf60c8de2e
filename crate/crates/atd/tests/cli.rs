use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use atd::io;
use tempfile::TempDir;

fn atd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atd")).args(args).env_remove("ATD_SEED").output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = atd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &[&str] = &[
    "--vocab-size", "200", "--normal-topics", "3", "--anomalous-topics", "1", "--salient", "15",
    "--train-docs", "30", "--validation-docs", "10", "--test-docs", "8", "--anom-docs", "6",
    "--doc-length", "60", "--salient-boost", "60",
];

fn synth(dir: &Path, seed: &str, extra: &[&str]) {
    let mut args = vec!["synth", "--out", s(dir), "--seed", seed];
    // later flags in `extra` replace the defaults
    for pair in SMALL.chunks(2) {
        if !extra.contains(&pair[0]) {
            args.extend_from_slice(pair);
        }
    }
    args.extend_from_slice(extra);
    ok(&args);
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn synth_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "7", &[]);
    synth(&b, "7", &[]);
    for f in ["vocab.txt", "train.txt", "validation.txt", "test.txt", "labels.txt", "truth.txt"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }
    assert_eq!(read(a.join("train.txt")).lines().count(), 90);
    assert_eq!(read(a.join("test.txt")).lines().count(), 30);
    assert_eq!(read(a.join("labels.txt")).lines().filter(|l| *l == "4").count(), 6);

    let c = tmp.path().join("c");
    synth(&c, "7", &["--anom-docs", "0"]);
    let labels = read(c.join("labels.txt"));
    assert_eq!(labels.lines().count(), 24);
    assert!(labels.lines().all(|l| ["1", "2", "3"].contains(&l)));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = atd(&["train", "--corpus", "x.txt", "--max-topics", "3", "--out", "m.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(atd(&[]).status.code(), Some(2));
    let mut args = vec!["synth", "--out", s(tmp.path()), "--seed", "1"];
    args.extend_from_slice(&["--dominant-prop", "1.5"]);
    assert_eq!(atd(&args).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let m = tmp.path().join("m.txt");
    let out = atd(&["train", "--corpus", "/nonexistent/c.txt", "--vocab", "/nonexistent/v.txt", "--max-topics", "2", "--out", s(&m), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/v.txt"));
}

#[test]
fn train_detect_eval_pipeline() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "3", &[]);
    let model = tmp.path().join("model.txt");
    let out = ok(&[
        "train", "--corpus", s(&data.join("train.txt")), "--vocab", s(&data.join("vocab.txt")),
        "--max-topics", "4", "--out", s(&model), "--seed", "5",
    ]);
    let log = String::from_utf8_lossy(&out.stderr).to_string();
    for m in 1..=4 {
        assert!(log.contains(&format!("BIC m={m} value=")), "{log}");
    }
    assert!(log.contains("seed=5"));
    assert!(log.contains("selected m=3"), "{log}");
    assert!(read(&model).starts_with("PTM v1 3 200\n"));
    assert!(Path::new(&format!("{}.manifest.json", s(&model))).exists());

    let det = tmp.path().join("det");
    ok(&[
        "detect", "--model", s(&model), "--test", s(&data.join("test.txt")), "--validation",
        s(&data.join("validation.txt")), "--vocab", s(&data.join("vocab.txt")), "--out", s(&det),
        "--b1", "39", "--b2", "19", "--alpha", "0.1", "--seed", "2", "--max-clusters", "3",
    ]);
    let report = atd::report::Report::load(&det.join("report.json")).unwrap();
    assert!(!report.clusters.is_empty());
    assert!(report.clusters[0].salient[0].term.as_deref().unwrap().starts_with('w'));
    assert!(read(det.join("report.txt")).starts_with("cluster 1 "));

    let out = ok(&[
        "eval", "--report", s(&det.join("report.json")), "--labels", s(&data.join("labels.txt")),
        "--anomalous-labels", "4", "--baseline", "lb",
    ]);
    let table = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(table.starts_with("cluster"), "{table}");
    assert!(table.lines().any(|l| l.starts_with("lb ")), "{table}");
    assert!(table.lines().any(|l| l.starts_with("atd ")), "{table}");

    // labels that do not match the batch
    let short = tmp.path().join("short.txt");
    fs::write(&short, "1\n2\n").unwrap();
    let out = atd(&["eval", "--report", s(&det.join("report.json")), "--labels", s(&short), "--anomalous-labels", "4"]);
    assert_eq!(out.status.code(), Some(3));

    // a vocabulary that does not match the model
    let small_vocab = tmp.path().join("v.txt");
    fs::write(&small_vocab, "a\nb\n").unwrap();
    let out = atd(&[
        "detect", "--model", s(&model), "--test", s(&data.join("test.txt")), "--validation",
        s(&data.join("validation.txt")), "--vocab", s(&small_vocab), "--out", s(&det), "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn single_topic_and_degenerate_thresholds() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "4", &[]);
    let model = tmp.path().join("m1.txt");
    ok(&[
        "train", "--corpus", s(&data.join("train.txt")), "--vocab", s(&data.join("vocab.txt")),
        "--max-topics", "1", "--out", s(&model), "--seed", "1",
    ]);
    assert!(read(&model).starts_with("PTM v1 1 200\n"));

    let det = tmp.path().join("det");
    let (test, validation) = (data.join("test.txt"), data.join("validation.txt"));
    let base = [
        "detect", "--model", s(&model), "--test", s(&test), "--validation",
        s(&validation), "--out", s(&det), "--b1", "39", "--seed", "3",
        "--max-clusters", "3",
    ];
    let mut args = base.to_vec();
    args.extend_from_slice(&["--b2", "1", "--alpha", "1.0"]);
    ok(&args);
    let report = atd::report::Report::load(&det.join("report.json")).unwrap();
    assert!(!report.clusters.is_empty());
    for c in &report.clusters {
        assert!(c.p_value == 0.5 || c.p_value == 1.0);
        assert!(c.significant);
    }

    let mut args = base.to_vec();
    args.extend_from_slice(&["--tau", "1.5"]);
    assert_eq!(atd(&args).status.code(), Some(2));
}

#[test]
fn empty_report_evaluates_cleanly() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("report.json");
    fs::write(&report, r#"{"clusters": [], "null": [{"doc": 0, "len": 3, "l0": -2.0}, {"doc": 1, "len": 2, "l0": -1.0}]}"#).unwrap();
    let labels = tmp.path().join("labels.txt");
    fs::write(&labels, "1\n2\n").unwrap();
    let out = ok(&["eval", "--report", s(&report), "--labels", s(&labels), "--anomalous-labels", "2", "--seed", "1"]);
    let table = String::from_utf8_lossy(&out.stdout).to_string();
    assert_eq!(table.lines().count(), 1, "{table}");
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
}

#[test]
fn nn_baseline_matches_pairwise_oracle() {
    let tmp = TempDir::new().unwrap();
    let train = [[3.0, 1.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0], [0.0, 1.0, 3.0, 0.0], [1.0, 0.0, 0.0, 2.0], [0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0], [4.0, 0.0, 1.0, 0.0]];
    let test = [[3.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 5.0], [0.0, 2.0, 2.0, 0.0]];
    let write = |name: &str, rows: &[[f64; 4]]| {
        let text: String = rows
            .iter()
            .map(|r| {
                let pairs: Vec<String> = r.iter().enumerate().filter(|(_, &c)| c > 0.0).map(|(w, c)| format!("{w}:{c}")).collect();
                format!("{} {}\n", pairs.len(), pairs.join(" "))
            })
            .collect();
        let p = tmp.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let (tr, te) = (write("train.txt", &train), write("test.txt", &test));
    let labels = tmp.path().join("labels.txt");
    fs::write(&labels, "a\nb\na\n").unwrap();
    let report = tmp.path().join("report.json");
    fs::write(&report, r#"{"clusters": [], "null": [{"doc": 0, "len": 4, "l0": -2.0}, {"doc": 1, "len": 5, "l0": -9.0}, {"doc": 2, "len": 4, "l0": -3.0}]}"#).unwrap();
    let out = ok(&[
        "eval", "--report", s(&report), "--labels", s(&labels), "--anomalous-labels", "b", "--baseline", "nn",
        "--k", "5", "--corpus", s(&tr), "--test", s(&te), "--seed", "1",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let got: Vec<f64> = stdout.lines().filter_map(|l| l.strip_prefix("nn p ")).map(|l| l.split(' ').nth(1).unwrap().parse().unwrap()).collect();

    let k = 5;
    let kth = |mut d: Vec<f64>| {
        d.sort_by(|a, b| a.total_cmp(b));
        d[k - 1]
    };
    let radii: Vec<f64> = (0..train.len())
        .map(|i| kth((0..train.len()).filter(|&j| j != i).map(|j| 1.0 - cosine(&train[i], &train[j])).collect()))
        .collect();
    let want: Vec<f64> = test
        .iter()
        .map(|t| {
            let r = kth(train.iter().map(|d| 1.0 - cosine(t, d)).collect());
            radii.iter().filter(|&&x| r < x - 1e-12).count() as f64 / train.len() as f64
        })
        .collect();
    assert_eq!(got.len(), 3, "{stdout}");
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-6, "{got:?} vs {want:?}");
    }
}

#[test]
fn manifest_replay_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "9", &[]);
    let manifest = data.join("manifest.json");
    let first: Vec<String> = ["train.txt", "test.txt", "labels.txt"].iter().map(|f| read(data.join(f))).collect();
    for f in ["train.txt", "test.txt", "labels.txt"] {
        fs::remove_file(data.join(f)).unwrap();
    }
    let saved = tmp.path().join("saved.json");
    fs::copy(&manifest, &saved).unwrap();
    ok(&["--manifest", s(&saved)]);
    let again: Vec<String> = ["train.txt", "test.txt", "labels.txt"].iter().map(|f| read(data.join(f))).collect();
    assert_eq!(first, again);
    assert_eq!(read(&manifest), read(&saved));

    // detection without an explicit seed records the one it drew
    let model = tmp.path().join("m.txt");
    ok(&["train", "--corpus", s(&data.join("train.txt")), "--vocab", s(&data.join("vocab.txt")), "--max-topics", "2", "--out", s(&model), "--seed", "1"]);
    let det = tmp.path().join("det");
    ok(&[
        "detect", "--model", s(&model), "--test", s(&data.join("test.txt")), "--validation",
        s(&data.join("validation.txt")), "--out", s(&det), "--b1", "19", "--b2", "9", "--max-clusters", "2",
    ]);
    let json = read(det.join("report.json"));
    let recorded = tmp.path().join("detect.json");
    fs::copy(det.join("manifest.json"), &recorded).unwrap();
    assert!(read(&recorded).contains("\"seed\""));
    fs::remove_dir_all(&det).unwrap();
    ok(&["--manifest", s(&recorded)]);
    assert_eq!(read(det.join("report.json")), json);
}

#[test]
fn seed_from_environment() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("a");
    let mut args = vec!["synth", "--out", s(&dir)];
    args.extend_from_slice(SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_atd")).args(&args).env("ATD_SEED", "7").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed=7"));
    let other = tmp.path().join("b");
    synth(&other, "7", &[]);
    assert_eq!(read(dir.join("test.txt")), read(other.join("test.txt")));
}

#[test]
fn strict_flags_unconverged_training() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "2", &[]);
    let model = tmp.path().join("m.txt");
    let (train, vocab) = (data.join("train.txt"), data.join("vocab.txt"));
    let args = [
        "train", "--corpus", s(&train), "--vocab", s(&vocab),
        "--max-topics", "2", "--out", s(&model), "--seed", "1", "--max-iters", "1",
    ];
    assert_eq!(atd(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(atd(&strict).status.code(), Some(4));
    assert_eq!(io::load_model(&model).unwrap().vocab_size(), 200);
}
