//! Generate a synthetic pose dataset, write it as JSON lines and read it back.
//!
//! `cargo run --example synth_dataset`

use sslr::data::{generate_synthetic, load_dataset, save_dataset};

fn main() -> sslr::Result<()> {
    let ds = generate_synthetic(4, 10, 12, 0.11, 7)?;
    let path = std::env::temp_dir().join("sslr_synth_example.jsonl");
    save_dataset(&ds, &path)?;

    let back = load_dataset(&path)?;
    assert_eq!(back, ds);
    println!("{} samples in {} classes -> {}", back.samples.len(), back.num_classes(), path.display());
    for (name, count) in back.classes.iter().zip(back.class_counts()) {
        println!("  {name}: {count}");
    }
    let first = &back.samples[0];
    println!("{} has {} frames; nose at {:?}", first.id, first.frames.len(), first.frames[0].joint(0));
    Ok(())
}
