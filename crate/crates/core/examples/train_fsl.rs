//! Supervised training on fully labeled synthetic data.
//!
//! `cargo run --release --example train_fsl`

use sslr::data::{generate_synthetic, DatasetSplit};
use sslr::model::{ModelConfig, SignClassifier};
use sslr::training::{evaluate, fit, TrainConfig};

fn main() -> sslr::Result<()> {
    let ds = generate_synthetic(5, 30, 20, 0.11, 1)?;
    let split = DatasetSplit::build(&ds, 1.0, 1)?;
    let config = ModelConfig {
        hidden_dim: 36,
        num_heads: 6,
        num_encoder_blocks: 1,
        num_decoder_blocks: 1,
        ffn_dim: 72,
        num_classes: 5,
        ..ModelConfig::default()
    };
    let mut model = SignClassifier::new(config, 1)?;
    let train = TrainConfig {
        epochs: 40,
        learning_rate: 0.003,
        seed: 1,
        ..TrainConfig::default()
    };
    let report = fit(&mut model, &split.labeled, &split.validation, &train)?;
    for e in report.epochs.iter().step_by(5) {
        println!("epoch {:>3}  loss {:.4}  val {:?}", e.epoch, e.train_loss, e.val_accuracy);
    }
    println!("kept epoch {} (val {:?})", report.best_epoch, report.best_val_accuracy);

    let eval = evaluate(&model, &split.test, &train.normalization)?;
    println!("test accuracy {:.3}", eval.accuracy);
    for (k, row) in eval.confusion.iter().enumerate() {
        println!("  true {k}: {row:?}");
    }
    Ok(())
}
