//! Supervised training with per-sample SGD, and evaluation.
//!
//! Samples are projected into signing space once per `fit` call. Every epoch
//! visits the labeled set in a freshly shuffled order; each visit augments
//! the projected frames with a stream keyed by `(seed, epoch, sample id)`,
//! fills missing joints, and takes one SGD step on the cross-entropy loss.
//! After the last epoch the parameters with the best validation accuracy are
//! restored.

use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledSample, PoseFrame};
use crate::error::{Error, Result};
use crate::model::{argmax, SignClassifier};
use crate::optim::SgdOptimizer;
use crate::preprocess::{augment, normalize_frames, project_frames, AugmentationConfig, NormalizationConfig};
use crate::rng::rng_for;
use crate::tensor::Tape;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Epochs without a new best validation accuracy before stopping;
    /// 0 disables early stopping.
    pub patience: usize,
    pub augmentation: AugmentationConfig,
    pub normalization: NormalizationConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.001,
            seed: 0,
            patience: 15,
            augmentation: AugmentationConfig::default(),
            normalization: NormalizationConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        self.augmentation.validate()?;
        self.normalization.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were kept; 0 if none improved on the
    /// starting point.
    pub best_epoch: usize,
    pub best_val_accuracy: Option<f64>,
    pub stopped_early: bool,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.epochs.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `None` for classes absent from the evaluated set.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

fn check_labels(samples: &[LabeledSample], num_classes: usize) -> Result<()> {
    match samples.iter().find(|s| s.label >= num_classes) {
        Some(s) => Err(Error::Dataset(format!(
            "sample {:?} has label {} but the model has {num_classes} classes",
            s.id, s.label
        ))),
        None => Ok(()),
    }
}

/// Frames as the model sees them at evaluation time.
pub fn prepare_frames(id: &str, frames: &[PoseFrame], cfg: &NormalizationConfig) -> Result<Vec<PoseFrame>> {
    normalize_frames(id, frames, cfg)
}

/// Class probabilities for one raw sample.
pub fn predict_probabilities(
    model: &SignClassifier,
    id: &str,
    frames: &[PoseFrame],
    cfg: &NormalizationConfig,
) -> Result<Vec<f64>> {
    let prepared = prepare_frames(id, frames, cfg)?;
    Ok(model.forward(&prepared)?)
}

/// Top-1 accuracy, per-class accuracy and the confusion matrix.
pub fn evaluate(
    model: &SignClassifier,
    samples: &[LabeledSample],
    cfg: &NormalizationConfig,
) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::Usage("cannot evaluate on an empty set".into()));
    }
    let c = model.config().num_classes;
    check_labels(samples, c)?;
    let mut confusion = vec![vec![0usize; c]; c];
    for s in samples {
        let probs = predict_probabilities(model, &s.id, &s.frames, cfg)?;
        confusion[s.label][argmax(&probs).0] += 1;
    }
    let correct: usize = (0..c).map(|k| confusion[k][k]).sum();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| row[k] as f64 / n as f64)
        })
        .collect();
    Ok(Evaluation {
        accuracy: correct as f64 / samples.len() as f64,
        per_class_accuracy,
        confusion,
    })
}

/// Mean cross-entropy over `samples` without augmentation.
pub fn mean_loss(
    model: &SignClassifier,
    samples: &[LabeledSample],
    cfg: &NormalizationConfig,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Usage("cannot compute the loss of an empty set".into()));
    }
    check_labels(samples, model.config().num_classes)?;
    let mut total = 0.0;
    for s in samples {
        let frames = prepare_frames(&s.id, &s.frames, cfg)?;
        let mut tape = Tape::new();
        let loss = model.loss(&mut tape, &frames, s.label)?;
        total += tape.value(loss).item();
    }
    Ok(total / samples.len() as f64)
}

/// Trains `model` on `labeled`, tracking accuracy on `validation` (which may
/// be empty, in which case the final parameters are kept).
pub fn fit(
    model: &mut SignClassifier,
    labeled: &[LabeledSample],
    validation: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::Usage("cannot train on an empty labeled set".into()));
    }
    let classes = model.config().num_classes;
    check_labels(labeled, classes)?;
    check_labels(validation, classes)?;

    let start = Instant::now();
    let optimizer = SgdOptimizer::new(cfg.learning_rate)?;
    let norm = &cfg.normalization;
    let projected = labeled
        .iter()
        .map(|s| project_frames(&s.id, &s.frames, norm))
        .collect::<Result<Vec<_>>>()?;

    let mut best_params = model.params.clone();
    let mut best_acc: Option<f64> = None;
    let mut best_epoch = 0;
    let mut last_improvement = 0;
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..labeled.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng_for(cfg.seed, &format!("train/order/{epoch}")));
        let mut loss_sum = 0.0;
        for &i in &order {
            let sample = &labeled[i];
            let mut frames = if cfg.augmentation.any_enabled() {
                let mut rng = rng_for(cfg.seed, &format!("train/augment/{epoch}/{}", sample.id));
                augment(&projected[i], &cfg.augmentation, &norm.layout, &mut rng)
            } else {
                projected[i].clone()
            };
            frames.iter_mut().for_each(PoseFrame::fill_missing);

            let mut tape = Tape::new();
            let loss = model.loss(&mut tape, &frames, sample.label)?;
            loss_sum += tape.value(loss).item();
            let grads = tape.backward(loss)?;
            model.params.accumulate(&tape, &grads);
            optimizer.step(&mut model.params)?;
        }
        let train_loss = loss_sum / labeled.len() as f64;

        let val_accuracy = if validation.is_empty() {
            None
        } else {
            Some(evaluate(model, validation, norm)?.accuracy)
        };
        debug!("epoch {epoch}: loss {train_loss:.5} val {val_accuracy:?}");
        records.push(EpochRecord {
            epoch,
            train_loss,
            val_accuracy,
        });

        if let Some(acc) = val_accuracy {
            // Ties move the kept parameters forward (they have seen more
            // updates) but do not reset the patience clock.
            if best_acc.map_or(true, |b| acc > b) {
                last_improvement = epoch;
            }
            if best_acc.map_or(true, |b| acc >= b) {
                best_acc = Some(acc);
                best_epoch = epoch;
                best_params = model.params.clone();
            }
            if cfg.patience > 0 && epoch - last_improvement >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    if best_acc.is_some() {
        model.params = best_params;
    } else {
        best_epoch = records.len();
    }
    let report = TrainReport {
        epochs: records,
        best_epoch,
        best_val_accuracy: best_acc,
        stopped_early,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    info!(
        "trained {} epochs on {} samples; best epoch {} (val {:?})",
        report.epochs_run(),
        labeled.len(),
        report.best_epoch,
        report.best_val_accuracy
    );
    Ok(report)
}
