//! The pseudo-label selection rule, then a short self-training run.
//!
//! `cargo run --release --example pseudo_label`

use sslr::data::{generate_synthetic, DatasetSplit};
use sslr::model::{ModelConfig, SignClassifier};
use sslr::ssl::{run_ssl, select_from_probabilities, SelectionMode, SslConfig};
use sslr::training::TrainConfig;

fn main() -> sslr::Result<()> {
    // Both classes prefer sample "a"; class 0 is more confident, so class 1
    // gets nothing this cycle.
    let probs = vec![vec![0.6, 0.4], vec![0.5, 0.3]];
    for mode in [SelectionMode::PerClass, SelectionMode::GlobalMax] {
        println!("{mode:?}: {:?}", select_from_probabilities(&["a", "b"], &probs, mode)?);
    }

    let ds = generate_synthetic(3, 18, 12, 0.11, 2)?;
    let split = DatasetSplit::build(&ds, 0.25, 2)?;
    let config = ModelConfig {
        hidden_dim: 36,
        num_heads: 6,
        num_encoder_blocks: 1,
        num_decoder_blocks: 1,
        ffn_dim: 72,
        num_classes: 3,
        ..ModelConfig::default()
    };
    let mut model = SignClassifier::new(config, 2)?;
    let train = TrainConfig {
        epochs: 60,
        learning_rate: 0.003,
        seed: 2,
        ..TrainConfig::default()
    };
    let ssl = SslConfig {
        retrain_epochs: 20,
        ..SslConfig::default()
    };
    let report = run_ssl(&mut model, &split, &train, &ssl)?;
    for c in &report.cycles {
        let picks: Vec<String> = c.batch.iter().map(|p| format!("{}->{}", p.id, p.label)).collect();
        println!(
            "cycle {:>2}  |L| {:>2}  |U| {:>2}  val {:?}  audit {:?}  {}",
            c.cycle,
            c.labeled,
            c.unlabeled,
            c.val_accuracy,
            c.audit_accuracy,
            picks.join(" ")
        );
    }
    println!("stopped: {:?}; test accuracy {:?}", report.stop_reason, report.final_test_accuracy);
    print!("{}", report.curve_csv());
    Ok(())
}
