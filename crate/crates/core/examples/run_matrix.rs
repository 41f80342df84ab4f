//! A miniature experiment matrix: class counts × fractions × seeds × modes,
//! aggregated into the two result tables.
//!
//! `cargo run --release --example run_matrix`

use sslr::config::RawConfig;
use sslr::data::{generate_synthetic, save_dataset};
use sslr::harness::cmd_matrix;

const CONFIG: &str = r#"
[model]
hidden_dim = 12
num_heads = 2
num_encoder_blocks = 1
num_decoder_blocks = 1
ffn_dim = 24

[train]
epochs = 5
learning_rate = 0.005

[ssl]
retrain_epochs = 3

[matrix]
fractions = [0.25, 0.5]
class_counts = [2, 4]
seeds = [0, 1, 2]
modes = ["fsl", "ssl"]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("sslr_matrix_example");
    let data = dir.join("data.jsonl");
    std::fs::create_dir_all(&dir)?;
    save_dataset(&generate_synthetic(4, 12, 6, 0.11, 0)?, &data)?;

    let mut cfg = RawConfig::parse_str(CONFIG, "example")?.resolve()?;
    cfg.data.path = Some(data);
    let out = dir.join("out");
    let summary = cmd_matrix(&cfg, &out, None)?;
    println!("{summary:?}");
    for name in ["table2.csv", "table1.csv"] {
        println!("{name}:\n{}", std::fs::read_to_string(out.join(name))?);
    }
    Ok(())
}
