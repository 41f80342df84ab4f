//! Project a sample into signing space, then apply each augmentation.
//!
//! `cargo run --example normalize_augment`

use sslr::data::{generate_synthetic, JointLayout, Side};
use sslr::preprocess::{
    add_gaussian_noise, augment, normalize_frames, rotate_arm, rotate_in_plane, shear_squeeze, AugmentationConfig,
    NormalizationConfig,
};
use sslr::rng::rng_for;

fn main() -> sslr::Result<()> {
    let ds = generate_synthetic(1, 1, 8, 0.11, 3)?;
    let sample = &ds.samples[0];
    let norm = NormalizationConfig::default();
    let layout = JointLayout::default();

    // Scaling and shifting the raw input does not change the projection.
    let mut zoomed = sample.frames.clone();
    zoomed.iter_mut().for_each(|f| f.map_present(|_, p| [3.0 * p[0] + 40.0, 3.0 * p[1] - 7.0]));
    let a = normalize_frames(&sample.id, &sample.frames, &norm)?;
    let b = normalize_frames(&sample.id, &zoomed, &norm)?;
    println!("nose raw {:?} -> {:?} (zoomed -> {:?})", sample.frames[0].joint(0), a[0].joint(0), b[0].joint(0));

    let mut rng = rng_for(0, "example");
    let wrist = layout.right_arm.wrist;
    let show = |label: &str, frames: &[sslr::data::PoseFrame]| println!("{label:>12}: right wrist {:?}", frames[0].joint(wrist));
    show("normalized", &a);

    let mut x = a.clone();
    add_gaussian_noise(&mut x, 0.01, &mut rng);
    show("noise", &x);

    let mut x = a.clone();
    rotate_in_plane(&mut x, 10.0, &layout);
    show("rotation", &x);

    let mut x = a.clone();
    rotate_arm(&mut x, Side::Right, -4.0, &layout);
    show("arm rotation", &x);

    let mut x = a.clone();
    shear_squeeze(&mut x, 0.1, &mut rng);
    show("shear", &x);

    let x = augment(&a, &AugmentationConfig::default(), &layout, &mut rng);
    show("all", &x);
    Ok(())
}
