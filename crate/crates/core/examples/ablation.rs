//! The five normalization/augmentation rows, trained in FSL mode.
//!
//! `cargo run --release --example ablation`

use sslr::config::{Mode, RawConfig};
use sslr::data::{generate_synthetic, save_dataset};
use sslr::harness::{cmd_ablate, ABLATION_ROWS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("sslr_ablation_example");
    std::fs::create_dir_all(&dir)?;
    let data = dir.join("data.jsonl");
    save_dataset(&generate_synthetic(3, 12, 8, 0.11, 4)?, &data)?;

    let mut raw = RawConfig::parse_str("[train]\nepochs = 8\nlearning_rate = 0.005\n", "example")?;
    for o in ["model.hidden_dim=24", "model.num_heads=4", "model.num_encoder_blocks=1", "model.num_decoder_blocks=1"] {
        raw.apply_override(o)?;
    }
    let mut cfg = raw.resolve()?;
    cfg.data.path = Some(data);
    cfg.data.fraction = 0.75;
    cfg.ablate.mode = Mode::Fsl;

    println!("rows: {}", ABLATION_ROWS.len());
    cmd_ablate(&cfg, &dir)?;
    print!("{}", std::fs::read_to_string(dir.join("table3.csv"))?);
    Ok(())
}
