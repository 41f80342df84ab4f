//! Config files: sections, `include`, and `--set` style overrides.
//!
//! `cargo run --example run_config`

use sslr::config::RawConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("sslr_config_example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("base.ini"), "[train]\nepochs = 50\nlearning_rate = 0.003\n\n[model]\nnum_encoder_blocks = 2\n")
        ?;
    std::fs::write(
        dir.join("run.ini"),
        "include base.ini\n\n[data]\nfraction = 0.25\n\n[ssl]\nselection = global_max\n",
    )
    ?;

    let mut raw = RawConfig::parse_file(dir.join("run.ini"))?;
    raw.apply_override("train.epochs=20")?;
    let cfg = raw.resolve()?;
    println!("epochs {} lr {} fraction {}", cfg.train.epochs, cfg.train.learning_rate, cfg.data.fraction);
    println!("encoder blocks {} selection {:?}", cfg.model.num_encoder_blocks, cfg.ssl.selection);
    println!("config hash {}", cfg.hash());

    let err = RawConfig::parse_str("[train]\nepoch = 3\n", "inline")?.resolve().unwrap_err();
    println!("typo rejected: {err}");
    Ok(())
}
