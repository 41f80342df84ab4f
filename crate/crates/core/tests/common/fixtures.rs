use sslr::data::{generate_synthetic, Dataset, DatasetSplit, LabeledSample};
use sslr::model::{ModelConfig, SignClassifier};
use sslr::preprocess::{AugmentationConfig, NormalizationConfig};
use sslr::training::TrainConfig;

pub fn tiny_config(classes: usize) -> ModelConfig {
    ModelConfig {
        hidden_dim: 12,
        num_heads: 2,
        num_encoder_blocks: 1,
        num_decoder_blocks: 1,
        ffn_dim: 24,
        num_classes: classes,
        ..ModelConfig::default()
    }
}

pub fn tiny_model(classes: usize, seed: u64) -> SignClassifier {
    SignClassifier::new(tiny_config(classes), seed).unwrap()
}

/// Plain training: no augmentation, no normalization.
pub fn plain_train(epochs: usize, lr: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        learning_rate: lr,
        seed,
        patience: 0,
        augmentation: AugmentationConfig::disabled(),
        normalization: NormalizationConfig {
            enabled: false,
            ..NormalizationConfig::default()
        },
    }
}

pub fn dataset(classes: usize, per_class: usize, frames: usize, sigma: f64, seed: u64) -> Dataset {
    generate_synthetic(classes, per_class, frames, sigma, seed).unwrap()
}

pub fn split(classes: usize, per_class: usize, fraction: f64, seed: u64) -> DatasetSplit {
    DatasetSplit::build(&dataset(classes, per_class, 4, 0.05, seed), fraction, seed).unwrap()
}

/// Squared Euclidean distance between two samples' raw coordinates.
pub fn distance(a: &LabeledSample, b: &LabeledSample) -> f64 {
    a.frames
        .iter()
        .zip(&b.frames)
        .flat_map(|(x, y)| x.coords().iter().zip(y.coords().iter()))
        .map(|(p, q)| (p - q) * (p - q))
        .sum()
}

/// Leave-out nearest-neighbour accuracy of `test` against `reference`.
pub fn nearest_neighbour_accuracy(reference: &[LabeledSample], test: &[LabeledSample]) -> f64 {
    let correct = test
        .iter()
        .filter(|t| {
            let best = reference
                .iter()
                .min_by(|a, b| distance(a, t).total_cmp(&distance(b, t)))
                .unwrap();
            best.label == t.label
        })
        .count();
    correct as f64 / test.len() as f64
}
