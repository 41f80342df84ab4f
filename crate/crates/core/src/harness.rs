//! Experiment commands behind the `sslr` binary.
//!
//! Every command takes a resolved [`RunConfig`] and writes its artifacts
//! (JSON reports, CSV tables and curves, checkpoints) under an output
//! directory. Reports embed the resolved config and the SHA-256 of the
//! dataset file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Mode, RunConfig};
use crate::data::{
    generate_synthetic, load_dataset, save_dataset, subset_classes, Dataset, DatasetSplit, LabeledSample,
    SignSample,
};
use crate::error::{Error, Result};
use crate::model::SignClassifier;
use crate::rng::sha256_hex;
use crate::ssl::{run_fsl_baseline, run_ssl, FslResult, SslReport};
use crate::training::{evaluate, Evaluation};

/// Reference accuracies (%) for 100 classes, per labeled fraction.
pub const REFERENCE_TABLE1: [(f64, f64, f64); 6] = [
    (0.01, 7.0, 7.0),
    (0.05, 7.0, 7.0),
    (0.10, 8.1, 9.7),
    (0.25, 22.5, 21.3),
    (0.50, 35.3, 36.8),
    (0.75, 48.1, 48.4),
];

pub const REFERENCE_CLASS_COUNTS: [usize; 6] = [5, 20, 40, 60, 80, 100];
pub const REFERENCE_FRACTIONS: [f64; 6] = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75];

/// Reference accuracies (%) as `[fraction][class count] = (fsl, ssl)`.
pub const REFERENCE_TABLE2: [[(f64, f64); 6]; 6] = [
    [(25.0, 60.0), (26.2, 21.5), (2.5, 2.5), (12.0, 10.8), (9.8, 10.7), (7.0, 7.0)],
    [(25.0, 60.0), (29.2, 21.5), (2.5, 2.5), (12.0, 10.8), (9.8, 10.7), (7.0, 7.0)],
    [(65.0, 50.0), (24.6, 29.2), (6.7, 5.9), (10.8, 6.0), (8.9, 8.9), (8.1, 9.7)],
    [(60.0, 55.0), (46.2, 44.6), (22.7, 24.4), (32.3, 28.1), (29.0, 25.2), (22.5, 21.3)],
    [(60.0, 70.0), (60.0, 53.8), (36.1, 47.1), (46.7, 47.3), (45.8, 37.9), (35.3, 36.8)],
    [(65.0, 70.0), (61.5, 63.1), (42.9, 47.9), (50.9, 49.7), (45.3, 51.4), (48.1, 48.4)],
];

/// One ablation row: which steps are on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub shear: bool,
    pub rotation: bool,
    pub gaussian_noise: bool,
    pub normalization: bool,
    pub reference_val: f64,
    pub reference_test: f64,
}

/// The five ablation rows, from nothing enabled to everything enabled.
/// "Rotation" covers both the in-plane and the arm rotation.
pub const ABLATION_ROWS: [AblationRow; 5] = [
    AblationRow { shear: false, rotation: false, gaussian_noise: false, normalization: false, reference_val: 29.8, reference_test: 46.2 },
    AblationRow { shear: false, rotation: false, gaussian_noise: false, normalization: true, reference_val: 61.9, reference_test: 58.5 },
    AblationRow { shear: false, rotation: false, gaussian_noise: true, normalization: true, reference_val: 58.3, reference_test: 56.9 },
    AblationRow { shear: false, rotation: true, gaussian_noise: true, normalization: true, reference_val: 60.7, reference_test: 58.5 },
    AblationRow { shear: true, rotation: true, gaussian_noise: true, normalization: true, reference_val: 63.1, reference_test: 63.1 },
];

impl AblationRow {
    pub fn apply(&self, cfg: &mut RunConfig) {
        cfg.normalization.enabled = self.normalization;
        cfg.augmentation.enable_noise = self.gaussian_noise;
        cfg.augmentation.enable_rotation = self.rotation;
        cfg.augmentation.enable_arm_rotation = self.rotation;
        cfg.augmentation.enable_shear = self.shear;
    }
}

fn fraction_label(f: f64) -> String {
    let pct = f * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round() as i64)
    } else {
        format!("{}%", (pct * 1000.0).round() / 1000.0)
    }
}

fn pct_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "NA".into())
}

fn mark(on: bool) -> &'static str {
    if on {
        "yes"
    } else {
        "no"
    }
}

/// Table of FSL/SSL accuracy (%) per fraction (rows) and class count
/// (column pairs).
pub fn table2_csv(fractions: &[f64], class_counts: &[usize], cell: impl Fn(f64, usize, Mode) -> Option<f64>) -> String {
    let mut out = String::from("labeled_data");
    for c in class_counts {
        out.push_str(&format!(",{c}_fsl,{c}_ssl"));
    }
    out.push('\n');
    for &f in fractions {
        out.push_str(&fraction_label(f));
        for &c in class_counts {
            for mode in [Mode::Fsl, Mode::Ssl] {
                out.push(',');
                out.push_str(&pct_cell(cell(f, c, mode)));
            }
        }
        out.push('\n');
    }
    out
}

/// Table of FSL and SSL accuracy (%) (rows) per fraction (columns).
pub fn table1_csv(fractions: &[f64], cell: impl Fn(f64, Mode) -> Option<f64>) -> String {
    let mut out = String::from("labeled_data");
    for &f in fractions {
        out.push(',');
        out.push_str(&fraction_label(f));
    }
    out.push('\n');
    for mode in [Mode::Fsl, Mode::Ssl] {
        out.push_str(&mode.as_str().to_uppercase());
        for &f in fractions {
            out.push(',');
            out.push_str(&pct_cell(cell(f, mode)));
        }
        out.push('\n');
    }
    out
}

pub fn reference_table1_csv() -> String {
    let fractions: Vec<f64> = REFERENCE_TABLE1.iter().map(|r| r.0).collect();
    table1_csv(&fractions, |f, mode| {
        REFERENCE_TABLE1
            .iter()
            .find(|r| r.0 == f)
            .map(|r| if mode == Mode::Fsl { r.1 } else { r.2 })
    })
}

pub fn reference_table2_csv() -> String {
    table2_csv(&REFERENCE_FRACTIONS, &REFERENCE_CLASS_COUNTS, |f, c, mode| {
        let i = REFERENCE_FRACTIONS.iter().position(|&x| x == f)?;
        let j = REFERENCE_CLASS_COUNTS.iter().position(|&x| x == c)?;
        let (fsl, ssl) = REFERENCE_TABLE2[i][j];
        Some(if mode == Mode::Fsl { fsl } else { ssl })
    })
}

/// Ablation table with measured and reference accuracies (%).
pub fn table3_csv(rows: &[(AblationRow, Option<f64>, Option<f64>)]) -> String {
    let mut out = String::from(
        "shear,rotation,gaussian_noise,normalization,val_acc,test_acc,reference_val_acc,reference_test_acc\n",
    );
    for (row, val, test) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.1},{:.1}\n",
            mark(row.shear),
            mark(row.rotation),
            mark(row.gaussian_noise),
            mark(row.normalization),
            pct_cell(val.map(|v| 100.0 * v)),
            pct_cell(test.map(|v| 100.0 * v)),
            row.reference_val,
            row.reference_test
        ));
    }
    out
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    // Write-then-rename so an interrupted run never leaves a torn file.
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text)
}

/// A dataset together with its provenance.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub path: PathBuf,
    pub sha256: String,
    pub dataset: Dataset,
}

impl LoadedData {
    pub fn provenance(&self) -> Value {
        json!({ "path": self.path, "sha256": self.sha256 })
    }
}

pub fn load_data(cfg: &RunConfig) -> Result<LoadedData> {
    let path = cfg.data.path.clone().ok_or_else(|| {
        Error::Usage("no dataset given: pass --data PATH or set `path` in [data]".into())
    })?;
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let sha256 = sha256_hex(&bytes);
    let dataset = load_dataset(&path)?;
    Ok(LoadedData {
        path,
        sha256,
        dataset,
    })
}

/// Class subset plus split and masking as configured.
pub fn build_split(cfg: &RunConfig, dataset: &Dataset) -> Result<DatasetSplit> {
    let subset;
    let ds = match cfg.data.classes {
        Some(k) => {
            subset = subset_classes(dataset, k)?;
            &subset
        }
        None => dataset,
    };
    DatasetSplit::build(ds, cfg.data.fraction, cfg.data.seed)
}

/// Outcome of one FSL or SSL run.
pub struct RunOutcome {
    pub mode: Mode,
    pub split: DatasetSplit,
    pub model: SignClassifier,
    pub fsl: Option<FslResult>,
    pub ssl: Option<SslReport>,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

impl RunOutcome {
    fn result_json(&self) -> Value {
        match (&self.fsl, &self.ssl) {
            (Some(f), _) => serde_json::to_value(f).expect("serializable"),
            (_, Some(s)) => serde_json::to_value(s).expect("serializable"),
            _ => Value::Null,
        }
    }
}

pub fn run_experiment(cfg: &RunConfig, dataset: &Dataset, mode: Mode) -> Result<RunOutcome> {
    let split = build_split(cfg, dataset)?;
    let mut model = SignClassifier::new(cfg.model_config(split.num_classes())?, cfg.train.seed)?;
    let train = cfg.train_config();
    let (fsl, ssl, val, test) = match mode {
        Mode::Fsl => {
            let r = run_fsl_baseline(&mut model, &split, &train)?;
            let (v, t) = (r.val_accuracy, r.test_accuracy);
            (Some(r), None, v, t)
        }
        Mode::Ssl => {
            let r = run_ssl(&mut model, &split, &train, &cfg.ssl)?;
            let (v, t) = (r.final_val_accuracy, r.final_test_accuracy);
            (None, Some(r), v, t)
        }
    };
    Ok(RunOutcome {
        mode,
        split,
        model,
        fsl,
        ssl,
        val_accuracy: val,
        test_accuracy: test,
    })
}

#[derive(Clone, Debug)]
pub struct SynthArgs {
    pub classes: usize,
    pub per_class: usize,
    pub frames: usize,
    pub sigma: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Writes a synthetic dataset; returns the number of samples.
pub fn cmd_synth(args: &SynthArgs) -> Result<usize> {
    let ds = generate_synthetic(args.classes, args.per_class, args.frames, args.sigma, args.seed)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_dataset(&ds, &args.out)?;
    Ok(ds.samples.len())
}

fn as_dataset(classes: &[String], samples: impl Iterator<Item = SignSample>) -> Dataset {
    Dataset {
        classes: classes.to_vec(),
        coord_space: crate::data::CoordSpace::Unit,
        samples: samples.collect(),
    }
}

fn labeled_part(classes: &[String], part: &[LabeledSample]) -> Dataset {
    as_dataset(
        classes,
        part.iter().map(|s| SignSample {
            id: s.id.clone(),
            frames: s.frames.clone(),
            label: Some(s.label),
            signer: None,
        }),
    )
}

/// Writes the four parts of the split plus the hidden labels separately.
pub fn cmd_split(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let data = load_data(cfg)?;
    let split = build_split(cfg, &data.dataset)?;
    let mut classes = split.class_names.clone();
    classes.truncate(split.num_classes());
    let with_space = |mut d: Dataset| {
        d.coord_space = data.dataset.coord_space;
        d
    };
    save_part(out, "labeled.jsonl", &with_space(labeled_part(&classes, &split.labeled)))?;
    save_part(out, "validation.jsonl", &with_space(labeled_part(&classes, &split.validation)))?;
    save_part(out, "test.jsonl", &with_space(labeled_part(&classes, &split.test)))?;
    let unlabeled = as_dataset(
        &classes,
        split.unlabeled.iter().map(|s| SignSample {
            id: s.id().to_string(),
            frames: s.frames().to_vec(),
            label: None,
            signer: None,
        }),
    );
    save_part(out, "unlabeled.jsonl", &with_space(unlabeled))?;
    let audit: BTreeMap<&str, &str> = split
        .unlabeled
        .iter()
        .filter_map(|s| {
            split
                .audit
                .true_label(s.id())
                .map(|l| (s.id(), classes[l].as_str()))
        })
        .collect();
    write_json(&out.join("audit.json"), &json!(audit))?;
    let summary = json!({
        "command": "split",
        "config": cfg.to_json(),
        "dataset": data.provenance(),
        "counts": {
            "labeled": split.labeled.len(),
            "unlabeled": split.unlabeled.len(),
            "validation": split.validation.len(),
            "test": split.test.len(),
        },
    });
    write_json(&out.join("split.json"), &summary)?;
    Ok(summary)
}

fn save_part(dir: &Path, name: &str, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_dataset(ds, dir.join(name))
}

fn epoch_curve_csv(report: &crate::training::TrainReport) -> String {
    let mut out = String::from("epoch,train_loss,val_acc\n");
    for e in &report.epochs {
        let val = e.val_accuracy.map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!("{},{:.6},{}\n", e.epoch, e.train_loss, val));
    }
    out
}

/// `train` (FSL) or `ssl`: runs once, writes `report.json`, `curve.csv` and
/// `model.json`.
pub fn cmd_run(cfg: &RunConfig, mode: Mode, out: &Path) -> Result<Value> {
    let data = load_data(cfg)?;
    let outcome = run_experiment(cfg, &data.dataset, mode)?;
    let test_eval: Option<Evaluation> = if outcome.split.test.is_empty() {
        None
    } else {
        Some(evaluate(&outcome.model, &outcome.split.test, &cfg.normalization)?)
    };
    let curve = match (&outcome.fsl, &outcome.ssl) {
        (Some(f), _) => epoch_curve_csv(&f.report),
        (_, Some(s)) => s.curve_csv(),
        _ => String::new(),
    };
    let report = json!({
        "command": if mode == Mode::Fsl { "train" } else { "ssl" },
        "mode": mode,
        "config": cfg.to_json(),
        "dataset": data.provenance(),
        "labeled": outcome.split.labeled.len(),
        "unlabeled": outcome.split.unlabeled.len(),
        "degenerate": outcome.split.unlabeled.is_empty(),
        "val_accuracy": outcome.val_accuracy,
        "test_accuracy": outcome.test_accuracy,
        "test_evaluation": test_eval,
        "result": outcome.result_json(),
    });
    write_json(&out.join("report.json"), &report)?;
    write_file(&out.join("curve.csv"), curve)?;
    outcome.model.save(out.join("model.json"))?;
    Ok(report)
}

/// Which part of the split `eval` scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EvalPart {
    Test,
    Validation,
    Labeled,
    All,
}

pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, part: EvalPart, out: Option<&Path>) -> Result<Value> {
    let data = load_data(cfg)?;
    let split = build_split(cfg, &data.dataset)?;
    let expected = cfg.model_config(split.num_classes())?;
    let model = SignClassifier::load(checkpoint, Some(&expected))?;
    let all;
    let samples: &[LabeledSample] = match part {
        EvalPart::Test => &split.test,
        EvalPart::Validation => &split.validation,
        EvalPart::Labeled => &split.labeled,
        EvalPart::All => {
            all = crate::data::split_train_val_test(&subset_or_all(cfg, &data.dataset)?, (4, 1, 1), cfg.data.seed)
                .map(|t| [t.train, t.validation, t.test].concat())?;
            &all
        }
    };
    let evaluation = evaluate(&model, samples, &cfg.normalization)?;
    let report = json!({
        "command": "eval",
        "config": cfg.to_json(),
        "dataset": data.provenance(),
        "checkpoint": checkpoint,
        "part": part,
        "samples": samples.len(),
        "accuracy": evaluation.accuracy,
        "evaluation": evaluation,
    });
    if let Some(dir) = out {
        write_json(&dir.join("eval.json"), &report)?;
    }
    Ok(report)
}

fn subset_or_all(cfg: &RunConfig, dataset: &Dataset) -> Result<Dataset> {
    match cfg.data.classes {
        Some(k) => subset_classes(dataset, k),
        None => Ok(dataset.clone()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: String,
    pub classes: usize,
    pub fraction: f64,
    pub seed: u64,
    pub mode: Mode,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Clone, Debug)]
struct Cell {
    classes: usize,
    fraction: f64,
    seed: u64,
    mode: Mode,
    config: RunConfig,
    key: String,
}

fn matrix_cells(cfg: &RunConfig, dataset_sha: &str) -> Vec<Cell> {
    let m = &cfg.matrix;
    let mut cells = Vec::new();
    for &classes in &m.class_counts {
        for &fraction in &m.fractions {
            for &seed in &m.seeds {
                for &mode in &m.modes {
                    let mut c = cfg.clone();
                    c.data.classes = Some(classes);
                    c.data.fraction = fraction;
                    c.set_seed(seed);
                    // Matrix-only settings do not affect a cell's result.
                    c.matrix = Default::default();
                    c.output = Default::default();
                    c.ablate = Default::default();
                    let key = sha256_hex(
                        json!({ "config": c.to_json(), "dataset": dataset_sha, "mode": mode })
                            .to_string()
                            .as_bytes(),
                    );
                    cells.push(Cell {
                        classes,
                        fraction,
                        seed,
                        mode,
                        config: c,
                        key,
                    });
                }
            }
        }
    }
    cells
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixSummary {
    pub cells: usize,
    pub reused: usize,
    pub ran: usize,
    pub failed: Vec<(String, String)>,
    pub pending: usize,
}

/// Runs every (class count × fraction × seed × mode) cell, skipping cells
/// whose marker already exists, then writes the tables. `max_new_cells`
/// stops early after that many newly run cells (tables are then written
/// from what exists).
pub fn cmd_matrix(cfg: &RunConfig, out: &Path, max_new_cells: Option<usize>) -> Result<MatrixSummary> {
    let data = load_data(cfg)?;
    for &k in &cfg.matrix.class_counts {
        if k > data.dataset.num_classes() {
            return Err(Error::Config(format!(
                "matrix class count {k} exceeds the dataset's {} classes",
                data.dataset.num_classes()
            )));
        }
    }
    let cells = matrix_cells(cfg, &data.sha256);
    let marker_dir = out.join("cells");
    let marker = |c: &Cell| marker_dir.join(format!("{}.json", c.key));

    let mut done: BTreeMap<String, CellResult> = BTreeMap::new();
    let mut todo = Vec::new();
    for c in &cells {
        match fs::read_to_string(marker(c)) {
            Ok(text) => {
                let r: CellResult = serde_json::from_str(&text)?;
                done.insert(c.key.clone(), r);
            }
            Err(_) => todo.push(c.clone()),
        }
    }
    let reused = done.len();
    let budget = max_new_cells.unwrap_or(usize::MAX).min(todo.len());
    let pending = todo.len() - budget;
    todo.truncate(budget);
    info!("matrix: {} cells, {reused} reused, {} to run", cells.len(), todo.len());

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(Cell, Result<CellResult>)>> = Mutex::new(Vec::new());
    let workers = cfg.matrix.workers.min(todo.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = todo.get(i) else { break };
                let res = run_experiment(&cell.config, &data.dataset, cell.mode).and_then(|o| {
                    let r = CellResult {
                        key: cell.key.clone(),
                        classes: cell.classes,
                        fraction: cell.fraction,
                        seed: cell.seed,
                        mode: cell.mode,
                        val_accuracy: o.val_accuracy,
                        test_accuracy: o.test_accuracy,
                    };
                    write_json(&marker(cell), &serde_json::to_value(&r)?)?;
                    Ok(r)
                });
                info!(
                    "cell classes={} fraction={} seed={} mode={}: {}",
                    cell.classes,
                    cell.fraction,
                    cell.seed,
                    cell.mode.as_str(),
                    match &res {
                        Ok(r) => format!("test {:?}", r.test_accuracy),
                        Err(e) => format!("failed: {e}"),
                    }
                );
                results.lock().expect("no poisoned workers").push((cell.clone(), res));
            });
        }
    });

    let mut failed = Vec::new();
    let ran = todo.len();
    for (cell, res) in results.into_inner().expect("no poisoned workers") {
        match res {
            Ok(r) => {
                done.insert(cell.key.clone(), r);
            }
            Err(e) => {
                warn!("cell {} failed: {e}", cell.key);
                failed.push((cell.key.clone(), e.to_string()));
            }
        }
    }
    failed.sort();

    let stat = |f: f64, k: usize, mode: Mode| {
        let accs: Vec<f64> = cells
            .iter()
            .filter(|c| c.fraction == f && c.classes == k && c.mode == mode)
            .filter_map(|c| done.get(&c.key).and_then(|r| r.test_accuracy))
            .map(|a| 100.0 * a)
            .collect();
        median(accs)
    };
    let m = &cfg.matrix;
    write_file(&out.join("table2.csv"), table2_csv(&m.fractions, &m.class_counts, stat))?;
    let slice = if m.class_counts.contains(&100) {
        100
    } else {
        *m.class_counts.iter().max().expect("validated nonempty")
    };
    if slice != 100 {
        info!("matrix: table1 uses {slice} classes (100 not configured)");
    }
    write_file(&out.join("table1.csv"), table1_csv(&m.fractions, |f, mode| stat(f, slice, mode)))?;
    write_file(&out.join("table1_reference.csv"), reference_table1_csv())?;
    write_file(&out.join("table2_reference.csv"), reference_table2_csv())?;

    let mut rows = String::from("classes,fraction,seed,mode,val_acc,test_acc\n");
    for c in &cells {
        if let Some(r) = done.get(&c.key) {
            let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            rows.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.classes,
                c.fraction,
                c.seed,
                c.mode.as_str(),
                cell(r.val_accuracy),
                cell(r.test_accuracy)
            ));
        }
    }
    write_file(&out.join("cells.csv"), rows)?;

    let summary = MatrixSummary {
        cells: cells.len(),
        reused,
        ran,
        failed,
        pending,
    };
    write_json(
        &out.join("matrix.json"),
        &json!({
            "command": "matrix",
            "config": cfg.to_json(),
            "dataset": data.provenance(),
            "summary": summary,
        }),
    )?;
    Ok(summary)
}

/// Runs the five ablation rows and writes `table3.csv`.
pub fn cmd_ablate(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let data = load_data(cfg)?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for row in ABLATION_ROWS {
        let mut c = cfg.clone();
        row.apply(&mut c);
        let o = run_experiment(&c, &data.dataset, cfg.ablate.mode)?;
        info!("ablation {row:?}: val {:?} test {:?}", o.val_accuracy, o.test_accuracy);
        rows.push((row, o.val_accuracy, o.test_accuracy));
        details.push(json!({
            "row": row,
            "val_accuracy": o.val_accuracy,
            "test_accuracy": o.test_accuracy,
        }));
    }
    write_file(&out.join("table3.csv"), table3_csv(&rows))?;
    let report = json!({
        "command": "ablate",
        "mode": cfg.ablate.mode,
        "config": cfg.to_json(),
        "dataset": data.provenance(),
        "rows": details,
    });
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
