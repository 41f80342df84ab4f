//! Synthetic pose datasets for desk-scale experiments.
//!
//! Each class owns a few random anchor poses; a class prototype moves
//! smoothly through its anchors over the sequence. A sample jitters the
//! prototype at two scales: the arm parameters of every anchor get
//! `N(0, sigma²)` offsets (a coherent per-sample deviation of the whole
//! motion), and every coordinate of every frame gets `N(0, (sigma/4)²)`.
//! Coordinates are clamped to the unit square.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::{CoordSpace, Dataset, PoseFrame, SignSample, NUM_JOINTS};
use crate::error::{Error, Result};
use crate::rng::{rng_for, Rng};

const ANCHORS: usize = 3;

const NOSE: [f64; 2] = [0.50, 0.32];
const NECK: [f64; 2] = [0.50, 0.42];
const SHOULDERS: [[f64; 2]; 2] = [[0.60, 0.44], [0.40, 0.44]];
const EARS: [[f64; 2]; 2] = [[0.56, 0.27], [0.44, 0.27]];
const EYES: [[f64; 2]; 2] = [[0.53, 0.25], [0.47, 0.25]];

#[derive(Clone, Copy, Debug)]
struct ArmPose {
    wrist: [f64; 2],
    bend: f64,
    hand_angle: f64,
    curl: f64,
}

impl ArmPose {
    fn random(rng: &mut Rng) -> Self {
        ArmPose {
            wrist: [rng.gen_range(0.25..0.75), rng.gen_range(0.35..0.85)],
            bend: rng.gen_range(-0.3..0.3),
            hand_angle: rng.gen_range(-PI..PI),
            curl: rng.gen_range(0.0..1.0),
        }
    }
}

/// Joint positions of the default layout for the given arm poses.
fn skeleton(arms: [ArmPose; 2]) -> Vec<[f64; 2]> {
    let mut joints = vec![[0.0; 2]; NUM_JOINTS];
    joints[0] = NOSE;
    joints[1] = NECK;
    for side in 0..2 {
        let arm = arms[side];
        let shoulder = SHOULDERS[side];
        let (dx, dy) = (arm.wrist[0] - shoulder[0], arm.wrist[1] - shoulder[1]);
        let elbow = [
            (shoulder[0] + arm.wrist[0]) / 2.0 - arm.bend * dy,
            (shoulder[1] + arm.wrist[1]) / 2.0 + arm.bend * dx,
        ];
        joints[2 + side] = shoulder;
        joints[4 + side] = elbow;
        joints[6 + side] = arm.wrist;
        joints[8 + side] = EARS[side];
        joints[10 + side] = EYES[side];

        let base = 12 + 21 * side;
        joints[base] = arm.wrist;
        let seg = 0.02 * (1.0 - 0.5 * arm.curl);
        for finger in 0..5 {
            let mut dir = arm.hand_angle + (finger as f64 - 2.0) * 0.3;
            let mut p = arm.wrist;
            for k in 0..4 {
                p = [p[0] + seg * dir.cos(), p[1] + seg * dir.sin()];
                joints[base + 1 + 4 * finger + k] = p;
                dir += 0.5 * arm.curl;
            }
        }
    }
    joints
}

fn interpolate(anchors: &[Vec<[f64; 2]>], t: f64) -> Vec<[f64; 2]> {
    let span = (anchors.len() - 1) as f64;
    let pos = (t * span).clamp(0.0, span);
    let i = (pos.floor() as usize).min(anchors.len() - 2);
    let local = pos - i as f64;
    let w = 0.5 - 0.5 * (PI * local).cos();
    anchors[i]
        .iter()
        .zip(&anchors[i + 1])
        .map(|(a, b)| [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])])
        .collect()
}

fn class_anchors(class: usize, seed: u64) -> Vec<[ArmPose; 2]> {
    let mut rng = rng_for(seed, &format!("synth/class/{class}"));
    (0..ANCHORS)
        .map(|_| [ArmPose::random(&mut rng), ArmPose::random(&mut rng)])
        .collect()
}

impl ArmPose {
    fn jittered(&self, noise: &Normal<f64>, rng: &mut Rng) -> Self {
        ArmPose {
            wrist: [
                self.wrist[0] + noise.sample(rng),
                self.wrist[1] + noise.sample(rng),
            ],
            bend: self.bend + noise.sample(rng),
            hand_angle: self.hand_angle + 2.0 * noise.sample(rng),
            curl: (self.curl + noise.sample(rng)).clamp(0.0, 1.0),
        }
    }
}

/// One joint list per frame, moving through the anchors.
fn trajectory(anchors: &[[ArmPose; 2]], frames: usize) -> Vec<Vec<[f64; 2]>> {
    let poses: Vec<Vec<[f64; 2]>> = anchors.iter().map(|a| skeleton(*a)).collect();
    (0..frames)
        .map(|f| {
            let t = if frames > 1 {
                f as f64 / (frames - 1) as f64
            } else {
                0.0
            };
            interpolate(&poses, t)
        })
        .collect()
}

/// Generates `num_classes × samples_per_class` labeled samples.
pub fn generate_synthetic(
    num_classes: usize,
    samples_per_class: usize,
    frames_per_sample: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes == 0 || samples_per_class == 0 || frames_per_sample == 0 {
        return Err(Error::Usage(
            "synthetic dataset counts must all be at least 1".into(),
        ));
    }
    let coarse = Normal::new(0.0, noise_sigma)
        .map_err(|e| Error::Usage(format!("noise sigma {noise_sigma}: {e}")))?;
    let fine = Normal::new(0.0, noise_sigma / 4.0).expect("valid sigma");
    let mut samples = Vec::with_capacity(num_classes * samples_per_class);
    for class in 0..num_classes {
        let anchors = class_anchors(class, seed);
        for i in 0..samples_per_class {
            let id = format!("c{class:03}_s{i:04}");
            let mut rng = rng_for(seed, &format!("synth/sample/{id}"));
            let own: Vec<[ArmPose; 2]> = anchors
                .iter()
                .map(|[l, r]| [l.jittered(&coarse, &mut rng), r.jittered(&coarse, &mut rng)])
                .collect();
            let frames = trajectory(&own, frames_per_sample)
                .iter()
                .map(|joints| {
                    let jittered: Vec<[f64; 2]> = joints
                        .iter()
                        .map(|p| {
                            [
                                (p[0] + fine.sample(&mut rng)).clamp(0.0, 1.0),
                                (p[1] + fine.sample(&mut rng)).clamp(0.0, 1.0),
                            ]
                        })
                        .collect();
                    PoseFrame::from_joints(&jittered)
                })
                .collect::<Result<Vec<_>>>()?;
            samples.push(SignSample {
                id,
                frames,
                label: Some(class),
                signer: Some(format!("synthetic{}", i % 4)),
            });
        }
    }
    Ok(Dataset {
        classes: (0..num_classes).map(|c| format!("sign_{c:03}")).collect(),
        coord_space: CoordSpace::Unit,
        samples,
    })
}
