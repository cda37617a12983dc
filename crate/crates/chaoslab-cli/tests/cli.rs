//! End-to-end runs of the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn chaoslab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaoslab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn certify_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&chaoslab(&["certify", "--map", "example_g"], dir.path()));
    assert!(text.contains("chaotic: true"));

    let text = stdout(&chaoslab(&["certify", "--map", "example_f"], dir.path()));
    assert!(text.contains("chaotic: false"));
    assert!(text.contains("1111"), "fixed point 1111 missing: {text}");

    let json = stdout(&chaoslab(
        &["certify", "--map", "f1(3)", "--json"],
        dir.path(),
    ));
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["chaotic"], serde_json::Value::Bool(true));
}

#[test]
fn certify_rejects_unknown_maps() {
    let dir = tempfile::tempdir().unwrap();
    let out = chaoslab(&["certify", "--map", "nonsense(9)"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn dataset_writes_full_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&chaoslab(
        &[
            "dataset", "--map", "f0(4)", "--k", "3", "--scheme", "1", "--out", "ds.csv",
        ],
        dir.path(),
    ));
    assert!(out.contains("wrote 2304 samples"));
    let text = std::fs::read_to_string(dir.path().join("ds.csv")).unwrap();
    assert_eq!(text.lines().count(), 2305);
    assert!(text.starts_with("in_1,in_2,in_3,in_4,in_5,in_6,out_1"));

    let bad = chaoslab(
        &[
            "dataset", "--map", "f0(4)", "--n", "3", "--k", "3", "--scheme", "1", "--out", "x.csv",
        ],
        dir.path(),
    );
    assert!(!bad.status.success());
}

#[test]
fn steer_finds_short_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&chaoslab(
        &[
            "steer",
            "--map",
            "example_g",
            "--from",
            "0011",
            "--to",
            "1110",
        ],
        dir.path(),
    ));
    assert!(text.contains("update components:"), "{text}");

    let text = stdout(&chaoslab(
        &[
            "steer",
            "--map",
            "example_f",
            "--from",
            "0000",
            "--to",
            "0001",
        ],
        dir.path(),
    ));
    assert!(text.contains("unreachable"), "{text}");
}

#[test]
fn probes_print_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&chaoslab(
        &[
            "probe",
            "expansivity",
            "--map",
            "f0(4)",
            "--exhaustive",
            "--horizon",
            "6",
        ],
        dir.path(),
    ));
    assert!(text.contains("minimum separation 1"), "{text}");

    let text = stdout(&chaoslab(
        &[
            "probe",
            "separated",
            "--map",
            "example_g",
            "--horizon",
            "3",
            "--sample",
            "32",
        ],
        dir.path(),
    ));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,epsilon,sample,separated,entropy_rate"
    );
    assert_eq!(lines.count(), 3);

    let text = stdout(&chaoslab(
        &[
            "probe",
            "mixing",
            "--map",
            "f0(2)",
            "--from",
            "00",
            "--to",
            "11",
            "--max-len",
            "7",
        ],
        dir.path(),
    ));
    assert!(text.contains("[2, 4, 6]"), "{text}");
}

#[test]
fn train_writes_loadable_models() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&chaoslab(
        &[
            "dataset", "--map", "f0(2)", "--k", "2", "--scheme", "2", "--out", "tiny.csv",
        ],
        dir.path(),
    ));
    let text = stdout(&chaoslab(
        &[
            "train",
            "--dataset",
            "tiny.csv",
            "--hidden",
            "4",
            "--epochs",
            "30",
            "--reps",
            "2",
            "--seed",
            "7",
            "--out-dir",
            "models",
            "--series",
        ],
        dir.path(),
    ));
    assert!(text.contains("config:"), "{text}");
    for name in [
        "rep0.mlp",
        "rep1.mlp",
        "rep0.history.csv",
        "series.csv",
        "series.svg",
    ] {
        let path = dir.path().join("models").join(name);
        assert!(path.exists(), "missing {name}");
    }
    let saved = chaoslab::train::SavedModel::load(dir.path().join("models/rep0.mlp")).unwrap();
    assert_eq!(saved.n, 2);
    assert_eq!(saved.k, 2);

    // Scheme-1 data cannot be trained with per-column networks.
    stdout(&chaoslab(
        &[
            "dataset", "--map", "f0(2)", "--k", "2", "--scheme", "1", "--out", "one.csv",
        ],
        dir.path(),
    ));
    let bad = chaoslab(
        &[
            "train",
            "--dataset",
            "one.csv",
            "--split-outputs",
            "--epochs",
            "5",
            "--reps",
            "1",
        ],
        dir.path(),
    );
    assert!(!bad.status.success());
}

#[test]
fn experiment_runs_a_small_matrix() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.cfg"),
        "maps = example_f\nn = 4\nk = 3\nschemes = 2\nhidden = 4\nepochs = 15\nreps = 2\nseed = 5\nout_dir = out\n",
    )
    .unwrap();
    let text = stdout(&chaoslab(
        &["experiment", "--config", "exp.cfg"],
        dir.path(),
    ));
    assert!(text.contains("results written under out"), "{text}");

    let results = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    let mut lines = results.lines();
    assert_eq!(
        lines.next().unwrap(),
        "map,chaotic,scheme,hidden,epochs,output,mean_success,std_dev,repetitions"
    );
    // One config row plus one row per output column.
    assert_eq!(lines.count(), 3);

    let certs = std::fs::read_to_string(dir.path().join("out/certificates.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&certs).unwrap();
    assert_eq!(
        value["example_f"]["chaotic"],
        serde_json::Value::Bool(false)
    );
}
