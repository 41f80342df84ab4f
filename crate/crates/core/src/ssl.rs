//! Pseudo-labeling loop.
//!
//! Train on the labeled set, then repeatedly: score every unlabeled sample,
//! pick the most confident sample for each class, move the picks (with their
//! predicted labels) into the labeled set, and re-train. Pseudo-labels are
//! never revised.
//!
//! Selection in the default `per_class` mode: each class nominates its
//! highest-probability sample (ties to the smaller id). Nominations are
//! processed by descending confidence, then class index, then id; a sample
//! already taken by an earlier nomination is not taken again and the later
//! class selects nothing this cycle. `global_max` picks only the single most
//! confident `(sample, class)` pair.

use std::collections::BTreeSet;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::data::{AuditLabels, DatasetSplit, LabeledSample, UnlabeledSample};
use crate::error::{Error, Result};
use crate::model::SignClassifier;
use crate::rng::derive_seed;
use crate::training::{evaluate, fit, predict_probabilities, TrainConfig, TrainReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    PerClass,
    GlobalMax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SslConfig {
    pub max_cycles: usize,
    /// Stop after this many consecutive cycles without a new best validation
    /// accuracy; 0 disables the rule.
    pub stall_cycles: usize,
    pub selection: SelectionMode,
    /// Epoch budget of each re-training.
    pub retrain_epochs: usize,
    /// Re-initialize the model before each re-training instead of continuing
    /// from the current parameters.
    pub cold_start: bool,
}

impl Default for SslConfig {
    fn default() -> Self {
        SslConfig {
            max_cycles: 10_000,
            stall_cycles: 0,
            selection: SelectionMode::PerClass,
            retrain_epochs: 60,
            cold_start: false,
        }
    }
}

impl SslConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_cycles == 0 {
            return Err(Error::Config("max_cycles must be at least 1".into()));
        }
        if self.retrain_epochs == 0 {
            return Err(Error::Config("retrain_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub id: String,
    pub label: usize,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelBatch {
    pub cycle: usize,
    pub selections: Vec<PseudoLabel>,
}

/// One selection as indices into the scored rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pick {
    pub sample: usize,
    pub class: usize,
    pub confidence: f64,
}

/// Applies the selection rule to a probability matrix whose rows belong to
/// the samples named in `ids`.
pub fn select_from_probabilities(
    ids: &[&str],
    probs: &[Vec<f64>],
    mode: SelectionMode,
) -> Result<Vec<Pick>> {
    if ids.is_empty() {
        return Err(Error::Usage("cannot select pseudo-labels from an empty pool".into()));
    }
    if ids.len() != probs.len() {
        return Err(Error::Usage(format!(
            "{} ids but {} probability rows",
            ids.len(),
            probs.len()
        )));
    }
    let classes = probs[0].len();
    if classes == 0 || probs.iter().any(|r| r.len() != classes) {
        return Err(Error::Usage("probability rows must share a nonzero width".into()));
    }
    if probs.iter().flatten().any(|p| !p.is_finite()) {
        return Err(Error::Usage("probabilities must be finite".into()));
    }

    let mut nominations: Vec<Pick> = (0..classes)
        .map(|class| {
            let mut best = 0;
            for i in 1..ids.len() {
                let (p, q) = (probs[i][class], probs[best][class]);
                if p > q || (p == q && ids[i] < ids[best]) {
                    best = i;
                }
            }
            Pick {
                sample: best,
                class,
                confidence: probs[best][class],
            }
        })
        .filter(|p| p.confidence > 0.0)
        .collect();
    nominations.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.class.cmp(&b.class))
            .then(ids[a.sample].cmp(ids[b.sample]))
    });
    if mode == SelectionMode::GlobalMax {
        nominations.truncate(1);
    }
    let mut taken = BTreeSet::new();
    Ok(nominations
        .into_iter()
        .filter(|p| taken.insert(p.sample))
        .collect())
}

/// Scores `pool` with `model` and selects the next batch.
pub fn select_pseudo_labels(
    model: &SignClassifier,
    pool: &[UnlabeledSample],
    train: &TrainConfig,
    mode: SelectionMode,
    cycle: usize,
) -> Result<PseudoLabelBatch> {
    let probs = pool
        .iter()
        .map(|s| predict_probabilities(model, s.id(), s.frames(), &train.normalization))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<&str> = pool.iter().map(UnlabeledSample::id).collect();
    let picks = select_from_probabilities(&ids, &probs, mode)?;
    Ok(PseudoLabelBatch {
        cycle,
        selections: picks
            .into_iter()
            .map(|p| PseudoLabel {
                id: ids[p.sample].to_string(),
                label: p.class,
                confidence: p.confidence,
            })
            .collect(),
    })
}

/// Fraction of a batch whose pseudo-label matches the hidden label.
fn audit_accuracy(batch: &PseudoLabelBatch, audit: &AuditLabels) -> Option<f64> {
    let judged: Vec<bool> = batch
        .selections
        .iter()
        .filter_map(|s| audit.true_label(&s.id).map(|t| t == s.label))
        .collect();
    (!judged.is_empty()).then(|| judged.iter().filter(|&&ok| ok).count() as f64 / judged.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// 0 is the initial fit on the labeled set.
    pub cycle: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub batch: Vec<PseudoLabel>,
    pub audit_accuracy: Option<f64>,
    pub train_epochs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    PoolEmpty,
    MaxCycles,
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalLabel {
    pub id: String,
    pub label: usize,
    pub pseudo: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SslReport {
    pub cycles: Vec<CycleRecord>,
    pub stop_reason: StopReason,
    /// True when the pool was empty from the start, so the run is plain
    /// supervised training.
    pub degenerate: bool,
    pub final_labels: Vec<FinalLabel>,
    pub final_val_accuracy: Option<f64>,
    pub final_test_accuracy: Option<f64>,
    pub wall_seconds: f64,
}

impl SslReport {
    pub fn first_audit_accuracy(&self) -> Option<f64> {
        self.cycles.get(1).and_then(|c| c.audit_accuracy)
    }

    /// `cycle,labeled,val_acc,test_acc,audit_acc`, one row per cycle.
    pub fn curve_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from("cycle,labeled,val_acc,test_acc,audit_acc\n");
        for c in &self.cycles {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.cycle,
                c.labeled,
                cell(c.val_accuracy),
                cell(c.test_accuracy),
                cell(c.audit_accuracy)
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FslResult {
    pub report: TrainReport,
    pub labeled_ids: Vec<String>,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

fn accuracy_on(model: &SignClassifier, set: &[LabeledSample], train: &TrainConfig) -> Result<Option<f64>> {
    if set.is_empty() {
        return Ok(None);
    }
    Ok(Some(evaluate(model, set, &train.normalization)?.accuracy))
}

/// Supervised baseline on exactly the labeled part of `split`.
pub fn run_fsl_baseline(
    model: &mut SignClassifier,
    split: &DatasetSplit,
    train: &TrainConfig,
) -> Result<FslResult> {
    let report = fit(model, &split.labeled, &split.validation, train)?;
    Ok(FslResult {
        report,
        labeled_ids: split.labeled.iter().map(|s| s.id.clone()).collect(),
        val_accuracy: accuracy_on(model, &split.validation, train)?,
        test_accuracy: accuracy_on(model, &split.test, train)?,
    })
}

/// Runs the pseudo-labeling loop on `split`, starting from `model`.
pub fn run_ssl(
    model: &mut SignClassifier,
    split: &DatasetSplit,
    train: &TrainConfig,
    cfg: &SslConfig,
) -> Result<SslReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut labeled = split.labeled.clone();
    let mut pool = split.unlabeled.clone();
    let initial_ids: BTreeSet<String> = labeled.iter().map(|s| s.id.clone()).collect();
    if let Some(s) = pool.iter().find(|s| initial_ids.contains(s.id())) {
        return Err(Error::Dataset(format!(
            "sample {:?} is both labeled and unlabeled",
            s.id()
        )));
    }
    let initial_params = model.params.clone();

    let first = fit(model, &labeled, &split.validation, train)?;
    let mut cycles = vec![CycleRecord {
        cycle: 0,
        labeled: labeled.len(),
        unlabeled: pool.len(),
        val_accuracy: accuracy_on(model, &split.validation, train)?,
        test_accuracy: accuracy_on(model, &split.test, train)?,
        batch: Vec::new(),
        audit_accuracy: None,
        train_epochs: first.epochs_run(),
    }];
    let degenerate = pool.is_empty();
    let mut best_val = cycles[0].val_accuracy;
    let mut stalled = 0;

    let stop_reason = loop {
        if pool.is_empty() {
            break StopReason::PoolEmpty;
        }
        let cycle = cycles.len();
        if cycle > cfg.max_cycles {
            break StopReason::MaxCycles;
        }
        let batch = select_pseudo_labels(model, &pool, train, cfg.selection, cycle)?;
        let chosen: BTreeSet<&str> = batch.selections.iter().map(|s| s.id.as_str()).collect();
        let (moved, kept): (Vec<_>, Vec<_>) = pool.into_iter().partition(|s| chosen.contains(s.id()));
        pool = kept;
        for sample in moved {
            let label = batch
                .selections
                .iter()
                .find(|s| s.id == sample.id())
                .map(|s| s.label)
                .expect("selected ids come from the pool");
            labeled.push(sample.with_label(label));
        }

        let mut retrain = train.clone();
        retrain.epochs = cfg.retrain_epochs;
        retrain.seed = derive_seed(train.seed, &format!("ssl/cycle/{cycle}"));
        if cfg.cold_start {
            model.params = initial_params.clone();
        }
        let report = fit(model, &labeled, &split.validation, &retrain)?;

        let record = CycleRecord {
            cycle,
            labeled: labeled.len(),
            unlabeled: pool.len(),
            val_accuracy: accuracy_on(model, &split.validation, train)?,
            test_accuracy: accuracy_on(model, &split.test, train)?,
            audit_accuracy: audit_accuracy(&batch, &split.audit),
            batch: batch.selections,
            train_epochs: report.epochs_run(),
        };
        info!(
            "cycle {cycle}: |L| {} |U| {} val {:?} audit {:?}",
            record.labeled, record.unlabeled, record.val_accuracy, record.audit_accuracy
        );
        let improved = match (record.val_accuracy, best_val) {
            (Some(v), Some(b)) => v > b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if improved {
            best_val = record.val_accuracy;
            stalled = 0;
        } else {
            stalled += 1;
        }
        cycles.push(record);
        if cfg.stall_cycles > 0 && stalled >= cfg.stall_cycles {
            break StopReason::Stalled;
        }
    };

    let mut final_labels: Vec<FinalLabel> = labeled
        .iter()
        .map(|s| FinalLabel {
            id: s.id.clone(),
            label: s.label,
            pseudo: !initial_ids.contains(s.id.as_str()),
        })
        .collect();
    final_labels.sort_by(|a, b| a.id.cmp(&b.id));
    let last = cycles.last().expect("initial cycle recorded");
    Ok(SslReport {
        final_val_accuracy: last.val_accuracy,
        final_test_accuracy: last.test_accuracy,
        cycles,
        stop_reason,
        degenerate,
        final_labels,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
