//! End-to-end runs of the `dlfit2` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn dlfit2(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlfit2"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) -> String {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn simulate_learn_eval_roundtrip() {
    let dir = tempdir().unwrap();
    let out = dlfit2(
        &[
            "simulate",
            &fixture("3node_a.bnet"),
            "--format",
            "csv",
            "--out",
            "t.csv",
        ],
        dir.path(),
    );
    assert_ok(&out);

    let out = dlfit2(
        &["learn", "t.csv", "--engine", "symbolic", "--out", "learned.lp"],
        dir.path(),
    );
    assert_ok(&out);
    let learned = std::fs::read_to_string(dir.path().join("learned.lp")).unwrap();
    assert_eq!(learned, "p :- q.\nq :- p, r.\nr :- not p.\n");

    let out = dlfit2(
        &[
            "eval",
            "--original",
            &fixture("3node_a.bnet"),
            "--predicted",
            "learned.lp",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let text = assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["mse"], 0.0);
    assert_eq!(report["rules_predicted"], 3);
}

#[test]
fn gen_train_predict_pipeline() {
    let dir = tempdir().unwrap();
    let out = dlfit2(
        &[
            "gen-data",
            "--mode",
            "exhaustive-complete",
            "--n",
            "2",
            "--out",
            "data.dlf2",
        ],
        dir.path(),
    );
    assert_ok(&out);
    assert!(dir.path().join("data.dlf2.manifest.json").exists());

    let out = dlfit2(
        &[
            "train",
            "--data",
            "data.dlf2",
            "--out",
            "model.dlf2m",
            "--epochs",
            "3",
            "--batch",
            "8",
            "--lr",
            "0.1",
            "--dim",
            "16",
            "--val-fraction",
            "0",
            "--no-augment",
        ],
        dir.path(),
    );
    assert_ok(&out);
    assert!(dir.path().join("model.dlf2m.json").exists());

    // two-variable program: a <- b, b <- not a
    std::fs::write(dir.path().join("sys.lp"), "a :- b.\nb :- not a.\n").unwrap();
    let out = dlfit2(
        &["simulate", "sys.lp", "--format", "csv", "--out", "t.csv"],
        dir.path(),
    );
    assert_ok(&out);
    let out = dlfit2(
        &[
            "predict",
            "t.csv",
            "--model",
            "model.dlf2m",
            "--out",
            "pred.lp",
        ],
        dir.path(),
    );
    assert_ok(&out);
    // three epochs will not learn anything useful; just require valid output
    let text = std::fs::read_to_string(dir.path().join("pred.lp")).unwrap();
    let _ = dlfit2_cli::parse_program(&text).unwrap();
}

#[test]
fn convert_roundtrips_between_dialects() {
    let dir = tempdir().unwrap();
    let out = dlfit2(
        &[
            "convert",
            &fixture("raf.bnet"),
            "--to",
            "program",
            "--out",
            "raf.lp",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let out = dlfit2(
        &["convert", "raf.lp", "--to", "bnet", "--out", "raf2.bnet"],
        dir.path(),
    );
    assert_ok(&out);

    let original = dlfit2_cli::parse_bnet(
        &std::fs::read_to_string(fixture("raf.bnet")).unwrap(),
    )
    .unwrap();
    let roundtripped = dlfit2_cli::parse_bnet(
        &std::fs::read_to_string(dir.path().join("raf2.bnet")).unwrap(),
    )
    .unwrap();
    assert_eq!(original, roundtripped);
}

#[test]
fn holdout_symbolic_with_everything_given_is_exact() {
    let dir = tempdir().unwrap();
    let out = dlfit2(
        &[
            "holdout",
            &fixture("3node_b.bnet"),
            "--given",
            "8",
            "--trials",
            "3",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let text = assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["mean_mse"], 0.0);
}

#[test]
fn neural_engines_require_a_model() {
    let dir = tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), "# vars: a\nsource,target\n0,1\n1,1\n").unwrap();
    let out = dlfit2(&["learn", "t.csv", "--engine", "neural"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--model"), "{stderr}");
}

#[test]
fn simulate_rejects_oversized_systems() {
    let dir = tempdir().unwrap();
    let lines: String = (0..21)
        .map(|i| format!("x{i} :- x{}.\n", (i + 1) % 21))
        .collect();
    std::fs::write(dir.path().join("big.lp"), lines).unwrap();
    let out = dlfit2(&["simulate", "big.lp"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cap"), "{stderr}");
}
