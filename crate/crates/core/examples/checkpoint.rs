//! Save a model, load it back, and confirm predictions are bit-identical.
//!
//! `cargo run --example checkpoint`

use sslr::data::generate_synthetic;
use sslr::model::{ModelConfig, SignClassifier};

fn main() -> sslr::Result<()> {
    let config = ModelConfig {
        hidden_dim: 12,
        num_heads: 3,
        num_encoder_blocks: 1,
        num_decoder_blocks: 1,
        ffn_dim: 24,
        num_classes: 4,
        ..ModelConfig::default()
    };
    let model = SignClassifier::new(config.clone(), 9)?;
    let path = std::env::temp_dir().join("sslr_checkpoint_example.json");
    model.save(&path)?;

    let back = SignClassifier::load(&path, Some(&config))?;
    let frames = &generate_synthetic(1, 1, 5, 0.11, 0)?.samples[0].frames;
    let (a, b) = (model.forward(frames)?, back.forward(frames)?);
    println!("{} parameters saved to {}", model.params.num_scalars(), path.display());
    println!("original {a:?}\nreloaded {b:?}");
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

    // A checkpoint for a different architecture is refused.
    let other = ModelConfig { num_classes: 5, ..config };
    println!("wrong config: {}", SignClassifier::load(&path, Some(&other)).unwrap_err());
    Ok(())
}
