//! Signing-space normalization and training-time augmentation.
//!
//! Normalization maps body joints into a square centred on the head whose
//! side is a multiple of the head height, and maps each hand into the unit
//! square through that hand's bounding box over the whole sample. It is a
//! similarity-invariant projection: scaling and translating the raw input
//! leaves the output unchanged.
//!
//! Augmentations run in a fixed order: Gaussian noise, in-plane rotation,
//! arm rotation, shear. Rotation and shear draw one set of parameters per
//! sample so the motion stays coherent in time; noise is drawn per
//! coordinate. Missing joints (`NaN` pairs) are never moved.

use log::debug;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{JointLayout, PoseFrame, Side, NUM_JOINTS};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizationConfig {
    pub enabled: bool,
    /// Side of the body box in head heights.
    pub signing_space_scale: f64,
    pub layout: JointLayout,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            enabled: true,
            signing_space_scale: 3.0,
            layout: JointLayout::default(),
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.signing_space_scale > 0.0) {
            return Err(Error::Config(format!(
                "signing_space_scale must be positive, got {}",
                self.signing_space_scale
            )));
        }
        self.layout.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationConfig {
    pub enable_noise: bool,
    pub noise_sigma: f64,
    pub enable_rotation: bool,
    pub max_rotation_deg: f64,
    pub enable_arm_rotation: bool,
    pub arm_rotation_deg: f64,
    pub enable_shear: bool,
    pub max_shear_fraction: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            enable_noise: true,
            noise_sigma: 0.01,
            enable_rotation: true,
            max_rotation_deg: 13.0,
            enable_arm_rotation: true,
            arm_rotation_deg: 4.0,
            enable_shear: true,
            max_shear_fraction: 0.15,
        }
    }
}

impl AugmentationConfig {
    /// Every augmentation switched off.
    pub fn disabled() -> Self {
        AugmentationConfig {
            enable_noise: false,
            enable_rotation: false,
            enable_arm_rotation: false,
            enable_shear: false,
            ..AugmentationConfig::default()
        }
    }

    pub fn any_enabled(&self) -> bool {
        self.enable_noise || self.enable_rotation || self.enable_arm_rotation || self.enable_shear
    }

    pub fn validate(&self) -> Result<()> {
        let mags = [
            ("noise_sigma", self.noise_sigma),
            ("max_rotation_deg", self.max_rotation_deg),
            ("arm_rotation_deg", self.arm_rotation_deg),
            ("max_shear_fraction", self.max_shear_fraction),
        ];
        for (name, v) in mags {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.max_shear_fraction >= 0.5 {
            return Err(Error::Config(format!(
                "max_shear_fraction must be < 0.5, got {}",
                self.max_shear_fraction
            )));
        }
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Head height (median vertical extent of the head landmarks) and head
/// centre (median of per-frame landmark means).
fn head_geometry(frames: &[PoseFrame], layout: &JointLayout) -> Option<(f64, [f64; 2])> {
    let mut extents = Vec::new();
    let mut cx = Vec::new();
    let mut cy = Vec::new();
    for f in frames {
        let pts: Vec<[f64; 2]> = layout.head.iter().filter_map(|&j| f.joint(j)).collect();
        if pts.is_empty() {
            continue;
        }
        let n = pts.len() as f64;
        cx.push(pts.iter().map(|p| p[0]).sum::<f64>() / n);
        cy.push(pts.iter().map(|p| p[1]).sum::<f64>() / n);
        let lo = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 0.0 {
            extents.push(hi - lo);
        }
    }
    if extents.is_empty() {
        return None;
    }
    Some((median(&mut extents), [median(&mut cx), median(&mut cy)]))
}

/// Projects frames into signing space, keeping missing joints as `NaN`.
pub fn project_frames(
    id: &str,
    frames: &[PoseFrame],
    cfg: &NormalizationConfig,
) -> Result<Vec<PoseFrame>> {
    if !cfg.enabled {
        return Ok(frames.to_vec());
    }
    let layout = &cfg.layout;
    let (head_height, centre) =
        head_geometry(frames, layout).ok_or_else(|| Error::Normalization {
            id: id.to_string(),
            reason: "head height is not computable in any frame".into(),
        })?;
    let side = cfg.signing_space_scale * head_height;

    let mut out = frames.to_vec();
    for f in &mut out {
        for j in 0..NUM_JOINTS {
            if layout.is_hand_joint(j) {
                continue;
            }
            if let Some(p) = f.joint(j) {
                f.set_joint(
                    j,
                    [
                        (p[0] - centre[0]) / side + 0.5,
                        (p[1] - centre[1]) / side + 0.5,
                    ],
                );
            }
        }
    }

    for hand in [layout.hand(Side::Left), layout.hand(Side::Right)] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for f in frames {
            for p in hand.iter().filter_map(|&j| f.joint(j)) {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        if lo[0] > hi[0] {
            continue; // hand never seen
        }
        let map = |v: f64, k: usize| {
            let w = hi[k] - lo[k];
            if w > 0.0 {
                (v - lo[k]) / w
            } else {
                0.5
            }
        };
        for f in &mut out {
            for &j in hand {
                if let Some(p) = f.joint(j) {
                    f.set_joint(j, [map(p[0], 0), map(p[1], 1)]);
                }
            }
        }
    }
    Ok(out)
}

/// Full normalization: signing-space projection, then missing joints → (0, 0).
pub fn normalize_frames(
    id: &str,
    frames: &[PoseFrame],
    cfg: &NormalizationConfig,
) -> Result<Vec<PoseFrame>> {
    let mut out = project_frames(id, frames, cfg)?;
    out.iter_mut().for_each(PoseFrame::fill_missing);
    Ok(out)
}

pub fn add_gaussian_noise(frames: &mut [PoseFrame], sigma: f64, rng: &mut Rng) {
    let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
    for f in frames {
        f.map_present(|_, p| [p[0] + normal.sample(rng), p[1] + normal.sample(rng)]);
    }
}

/// Rotates `p` about `pivot`; with y pointing down a positive angle turns
/// `+x` into `+y`.
pub fn rotate_point(p: [f64; 2], pivot: [f64; 2], angle_deg: f64) -> [f64; 2] {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let (dx, dy) = (p[0] - pivot[0], p[1] - pivot[1]);
    [pivot[0] + c * dx - s * dy, pivot[1] + s * dx + c * dy]
}

/// Mid-shoulder point, or the centroid of present joints when a shoulder is
/// missing.
fn rotation_pivot(f: &PoseFrame, layout: &JointLayout) -> Option<[f64; 2]> {
    if let (Some(l), Some(r)) = (f.joint(layout.left_arm.shoulder), f.joint(layout.right_arm.shoulder)) {
        return Some([(l[0] + r[0]) / 2.0, (l[1] + r[1]) / 2.0]);
    }
    let pts: Vec<[f64; 2]> = (0..NUM_JOINTS).filter_map(|j| f.joint(j)).collect();
    if pts.is_empty() {
        return None;
    }
    let n = pts.len() as f64;
    Some([
        pts.iter().map(|p| p[0]).sum::<f64>() / n,
        pts.iter().map(|p| p[1]).sum::<f64>() / n,
    ])
}

/// Rigidly rotates every frame by `angle_deg` about its mid-shoulder point.
pub fn rotate_in_plane(frames: &mut [PoseFrame], angle_deg: f64, layout: &JointLayout) {
    if angle_deg == 0.0 {
        return;
    }
    for f in frames {
        if let Some(pivot) = rotation_pivot(f, layout) {
            f.map_present(|_, p| rotate_point(p, pivot, angle_deg));
        }
    }
}

/// Rotates the elbow, wrist and hand of one arm about its shoulder.
/// Frames where that shoulder is missing are left alone.
pub fn rotate_arm(frames: &mut [PoseFrame], side: Side, angle_deg: f64, layout: &JointLayout) {
    if angle_deg == 0.0 {
        return;
    }
    let arm = layout.arm(side);
    let chain: Vec<usize> = [arm.elbow, arm.wrist]
        .into_iter()
        .chain(layout.hand(side).iter().copied())
        .collect();
    for (i, f) in frames.iter_mut().enumerate() {
        let Some(pivot) = f.joint(arm.shoulder) else {
            debug!("arm rotation: {side:?} shoulder missing in frame {i}, skipped");
            continue;
        };
        for &j in &chain {
            if let Some(p) = f.joint(j) {
                f.set_joint(j, rotate_point(p, pivot, angle_deg));
            }
        }
    }
}

/// Projective map of the unit square onto a quadrilateral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography {
    m: [f64; 8],
}

impl Homography {
    /// Maps corners (0,0), (1,0), (1,1), (0,1) onto `quad` in the same order.
    pub fn square_to_quad(quad: [[f64; 2]; 4]) -> Self {
        let [[x0, y0], [x1, y1], [x2, y2], [x3, y3]] = quad;
        let (dx1, dx2, dx3) = (x1 - x2, x3 - x2, x0 - x1 + x2 - x3);
        let (dy1, dy2, dy3) = (y1 - y2, y3 - y2, y0 - y1 + y2 - y3);
        let (g, h) = if dx3 == 0.0 && dy3 == 0.0 {
            (0.0, 0.0)
        } else {
            let det = dx1 * dy2 - dx2 * dy1;
            ((dx3 * dy2 - dx2 * dy3) / det, (dx1 * dy3 - dx3 * dy1) / det)
        };
        Homography {
            m: [
                x1 - x0 + g * x1,
                x3 - x0 + h * x3,
                x0,
                y1 - y0 + g * y1,
                y3 - y0 + h * y3,
                y0,
                g,
                h,
            ],
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let [a, b, c, d, e, f, g, h] = self.m;
        let w = g * p[0] + h * p[1] + 1.0;
        [(a * p[0] + b * p[1] + c) / w, (d * p[0] + e * p[1] + f) / w]
    }
}

/// Insets (fractions of the unit side) for the four corners of a squeeze.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeInsets {
    pub left_top: f64,
    pub left_bottom: f64,
    pub right_top: f64,
    pub right_bottom: f64,
}

impl SqueezeInsets {
    pub fn none() -> Self {
        SqueezeInsets {
            left_top: 0.0,
            left_bottom: 0.0,
            right_top: 0.0,
            right_bottom: 0.0,
        }
    }

    fn draw(max: f64, rng: &mut Rng) -> Self {
        let mut u = || if max > 0.0 { rng.gen_range(0.0..=max) } else { 0.0 };
        SqueezeInsets {
            left_top: u(),
            left_bottom: u(),
            right_top: u(),
            right_bottom: u(),
        }
    }

    /// Horizontal squeeze: left and right edges move inward.
    pub fn horizontal(&self) -> Homography {
        Homography::square_to_quad([
            [self.left_top, 0.0],
            [1.0 - self.right_top, 0.0],
            [1.0 - self.right_bottom, 1.0],
            [self.left_bottom, 1.0],
        ])
    }

    /// Vertical squeeze: top and bottom edges move inward. `left_*`/`right_*`
    /// name the column of the corner.
    pub fn vertical(&self) -> Homography {
        Homography::square_to_quad([
            [0.0, self.left_top],
            [1.0, self.right_top],
            [1.0, 1.0 - self.right_bottom],
            [0.0, 1.0 - self.left_bottom],
        ])
    }
}

pub fn apply_homography(frames: &mut [PoseFrame], h: &Homography) {
    for f in frames {
        f.map_present(|_, p| h.apply(p));
    }
}

/// Random perspective squeeze. A horizontal squeeze is always applied; a
/// vertical one follows with probability one half.
pub fn shear_squeeze(frames: &mut [PoseFrame], max_fraction: f64, rng: &mut Rng) {
    let horizontal = SqueezeInsets::draw(max_fraction, rng);
    apply_homography(frames, &horizontal.horizontal());
    if rng.gen_bool(0.5) {
        let vertical = SqueezeInsets::draw(max_fraction, rng);
        apply_homography(frames, &vertical.vertical());
    }
}

fn uniform_angle(max_deg: f64, rng: &mut Rng) -> f64 {
    if max_deg > 0.0 {
        rng.gen_range(-max_deg..=max_deg)
    } else {
        0.0
    }
}

/// Applies the enabled augmentations in order: noise, rotation, arm
/// rotation, shear.
pub fn augment(
    frames: &[PoseFrame],
    cfg: &AugmentationConfig,
    layout: &JointLayout,
    rng: &mut Rng,
) -> Vec<PoseFrame> {
    let mut out = frames.to_vec();
    if cfg.enable_noise {
        add_gaussian_noise(&mut out, cfg.noise_sigma, rng);
    }
    if cfg.enable_rotation {
        let angle = uniform_angle(cfg.max_rotation_deg, rng);
        rotate_in_plane(&mut out, angle, layout);
    }
    if cfg.enable_arm_rotation {
        for side in [Side::Left, Side::Right] {
            if rng.gen_bool(0.5) {
                let angle = uniform_angle(cfg.arm_rotation_deg, rng);
                rotate_arm(&mut out, side, angle, layout);
            }
        }
    }
    if cfg.enable_shear {
        shear_squeeze(&mut out, cfg.max_shear_fraction, rng);
    }
    out
}
