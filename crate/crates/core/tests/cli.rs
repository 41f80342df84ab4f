use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sslr::data::{generate_synthetic, load_dataset};

const CONFIG: &str = "\
[data]
fraction = 0.5

[model]
hidden_dim = 12
num_heads = 2
num_encoder_blocks = 1
num_decoder_blocks = 1
ffn_dim = 24

[train]
epochs = 3
learning_rate = 0.01

[ssl]
retrain_epochs = 1

[matrix]
fractions = [0.5]
class_counts = [3]
seeds = [0]
modes = [\"fsl\"]
";

fn sslr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sslr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sslr(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(ws.path("run.ini"), CONFIG).unwrap();
        ok(&[
            "synth", "--classes", "3", "--per-class", "12", "--frames", "4", "--seed", "2", "--out",
            ws.s("data.jsonl").as_str(),
        ]);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    /// Runs `command` with the shared config and dataset, writing to `out`.
    fn run(&self, command: &str, out: &str, extra: &[&str]) -> String {
        let (config, data, out) = (self.s("run.ini"), self.s("data.jsonl"), self.s(out));
        let mut args = vec![command, "--config", &config, "--data", &data, "--out", &out];
        args.extend_from_slice(extra);
        ok(&args)
    }
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let line = ok(&[
            "synth", "--classes", "5", "--per-class", "30", "--frames", "4", "--seed", "7", "--out",
            p.to_str().unwrap(),
        ]);
        assert!(line.starts_with("synth: seed=7 samples=150"), "{line}");
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let loaded = load_dataset(&a).unwrap();
    assert_eq!(loaded, generate_synthetic(5, 30, 4, 0.11, 7).unwrap());
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let ws = Workspace::new();
    let out = sslr(&["train", "--config", &ws.s("run.ini")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: kind=usage message="), "{err}");
    assert!(err.contains("--data"), "{err}");
}

#[test]
fn bad_config_and_arguments_exit_two() {
    let ws = Workspace::new();
    let out = sslr(&["train", "--config", &ws.s("run.ini"), "--set", "train.epoch=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=config"));
    assert_eq!(sslr(&["train", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(sslr(&["train"]).status.code(), Some(2));
}

#[test]
fn unreadable_dataset_exits_one() {
    let ws = Workspace::new();
    let out = sslr(&["train", "--config", &ws.s("run.ini"), "--data", &ws.s("absent.jsonl")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_matches_checkpoint_evaluation() {
    let ws = Workspace::new();
    ws.run("train", "train", &[]);
    let report = json(&ws.path("train/report.json"));
    ok(&[
        "eval", "--config", &ws.s("run.ini"), "--data", &ws.s("data.jsonl"), "--checkpoint",
        &ws.s("train/model.json"), "--out", &ws.s("eval"),
    ]);
    let eval = json(&ws.path("eval/eval.json"));
    assert_eq!(eval["accuracy"].as_f64(), report["test_accuracy"].as_f64());
    assert_eq!(eval["evaluation"], report["test_evaluation"]);
    assert!(fs::read_to_string(ws.path("train/curve.csv")).unwrap().starts_with("epoch,train_loss,val_acc\n"));
}

#[test]
fn single_cell_matrix_equals_train() {
    let ws = Workspace::new();
    ws.run("train", "train", &[]);
    ws.run("matrix", "matrix", &[]);
    let report = json(&ws.path("train/report.json"));
    let markers: Vec<_> = fs::read_dir(ws.path("matrix/cells")).unwrap().collect();
    assert_eq!(markers.len(), 1);
    let cell = json(&markers[0].as_ref().unwrap().path());
    assert_eq!(cell["test_accuracy"].as_f64(), report["test_accuracy"].as_f64());
    assert_eq!(cell["val_accuracy"].as_f64(), report["val_accuracy"].as_f64());
    let table = fs::read_to_string(ws.path("matrix/table2.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "labeled_data,3_fsl,3_ssl");
}

#[test]
fn interrupted_matrix_resumes_to_the_same_tables() {
    let ws = Workspace::new();
    let grid = ["--set", "matrix.fractions=[0.25,0.5]", "--set", "matrix.modes=[\"fsl\",\"ssl\"]"];
    ws.run("matrix", "full", &grid);
    let mut partial = grid.to_vec();
    partial.extend(["--max-cells", "1"]);
    let first = ws.run("matrix", "resumed", &partial);
    assert!(first.contains("ran=1") && first.contains("pending=3"), "{first}");
    let second = ws.run("matrix", "resumed", &grid);
    assert!(second.contains("ran=3") && second.contains("reused=1"), "{second}");
    for name in ["table1.csv", "table2.csv", "cells.csv"] {
        assert_eq!(
            fs::read(ws.path("full").join(name)).unwrap(),
            fs::read(ws.path("resumed").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn ablation_baseline_row_equals_plain_train() {
    let ws = Workspace::new();
    ws.run("ablate", "ablate", &["--set", "ablate.mode=fsl"]);
    ws.run(
        "train",
        "plain",
        &[
            "--set", "normalization.enabled=false",
            "--set", "augmentation.enable_noise=false",
            "--set", "augmentation.enable_rotation=false",
            "--set", "augmentation.enable_arm_rotation=false",
            "--set", "augmentation.enable_shear=false",
        ],
    );
    let ablate = json(&ws.path("ablate/report.json"));
    let plain = json(&ws.path("plain/report.json"));
    assert_eq!(ablate["rows"][0]["test_accuracy"].as_f64(), plain["test_accuracy"].as_f64());
    let table = fs::read_to_string(ws.path("ablate/table3.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
    assert!(table.lines().nth(1).unwrap().starts_with("no,no,no,no,"));
}

#[test]
fn full_fraction_ssl_is_degenerate() {
    let ws = Workspace::new();
    let line = ws.run("ssl", "ssl", &["--set", "data.fraction=1.0"]);
    assert!(line.contains("degenerate=true"), "{line}");
    let report = json(&ws.path("ssl/report.json"));
    assert_eq!(report["degenerate"], Value::Bool(true));
    assert_eq!(report["unlabeled"], 0);
}

#[test]
fn split_writes_disjoint_parts() {
    let ws = Workspace::new();
    let line = ws.run("split", "split", &[]);
    assert!(line.starts_with("split: labeled=12 unlabeled=12 validation=6 test=6"), "{line}");
    let audit = json(&ws.path("split/audit.json"));
    assert_eq!(audit.as_object().unwrap().len(), 12);
    let unlabeled = load_dataset(ws.path("split/unlabeled.jsonl")).unwrap();
    assert!(unlabeled.samples.iter().all(|s| s.label.is_none()));
}
