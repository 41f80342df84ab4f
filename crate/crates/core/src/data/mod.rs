//! Pose-sequence data model.
//!
//! A frame holds 54 joints in 2-D (108 values). A joint that the landmark
//! detector missed is stored as `(NaN, NaN)`; no other NaN is legal.
//!
//! Labeled and unlabeled training samples are distinct types.
//! [`UnlabeledSample`] has no label at all; the true labels of the unlabeled
//! pool live in [`AuditLabels`], which only reporting code consults.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod io;
mod split;
mod synth;

pub use io::{load_dataset, parse_dataset, save_dataset, write_dataset};
pub use split::{mask_labels, split_train_val_test, subset_classes, MaskedTrainSet, TrainValTest};
pub use synth::generate_synthetic;

pub const NUM_JOINTS: usize = 54;
pub const FRAME_DIM: usize = 2 * NUM_JOINTS;

/// One frame of 54 `(x, y)` joints; x grows rightward, y downward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseFrame {
    coords: [f64; FRAME_DIM],
}

impl PoseFrame {
    /// Validates the 108 values. Missing joints are `(NaN, NaN)` pairs.
    pub fn new(coords: &[f64]) -> Result<Self> {
        let coords: [f64; FRAME_DIM] = coords.try_into().map_err(|_| {
            Error::Dataset(format!(
                "frame has {} values ({} joints), expected {FRAME_DIM} ({NUM_JOINTS} joints)",
                coords.len(),
                coords.len() / 2
            ))
        })?;
        for (j, pair) in coords.chunks(2).enumerate() {
            let (x, y) = (pair[0], pair[1]);
            let both_missing = x.is_nan() && y.is_nan();
            if !both_missing && !(x.is_finite() && y.is_finite()) {
                return Err(Error::Dataset(format!(
                    "joint {j} has illegal value ({x}, {y})"
                )));
            }
        }
        Ok(PoseFrame { coords })
    }

    /// A frame with every joint missing.
    pub fn missing() -> Self {
        PoseFrame {
            coords: [f64::NAN; FRAME_DIM],
        }
    }

    pub fn zeros() -> Self {
        PoseFrame {
            coords: [0.0; FRAME_DIM],
        }
    }

    pub fn from_joints(joints: &[[f64; 2]]) -> Result<Self> {
        if joints.len() != NUM_JOINTS {
            return Err(Error::Dataset(format!(
                "frame has {} joints, expected {NUM_JOINTS}",
                joints.len()
            )));
        }
        let flat: Vec<f64> = joints.iter().flatten().copied().collect();
        PoseFrame::new(&flat)
    }

    pub fn coords(&self) -> &[f64; FRAME_DIM] {
        &self.coords
    }

    /// `None` when the joint is missing.
    pub fn joint(&self, j: usize) -> Option<[f64; 2]> {
        let p = [self.coords[2 * j], self.coords[2 * j + 1]];
        if p[0].is_nan() {
            None
        } else {
            Some(p)
        }
    }

    pub fn is_missing(&self, j: usize) -> bool {
        self.coords[2 * j].is_nan()
    }

    /// Sets a joint; both coordinates must be finite.
    pub fn set_joint(&mut self, j: usize, p: [f64; 2]) {
        debug_assert!(p[0].is_finite() && p[1].is_finite());
        self.coords[2 * j] = p[0];
        self.coords[2 * j + 1] = p[1];
    }

    pub fn clear_joint(&mut self, j: usize) {
        self.coords[2 * j] = f64::NAN;
        self.coords[2 * j + 1] = f64::NAN;
    }

    /// Replaces missing joints by `(0, 0)`.
    pub fn fill_missing(&mut self) {
        for v in &mut self.coords {
            if v.is_nan() {
                *v = 0.0;
            }
        }
    }

    /// Applies `f` to every present joint.
    pub fn map_present(&mut self, mut f: impl FnMut(usize, [f64; 2]) -> [f64; 2]) {
        for j in 0..NUM_JOINTS {
            if let Some(p) = self.joint(j) {
                self.set_joint(j, f(j, p));
            }
        }
    }
}

/// Coordinate convention declared by a dataset file header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordSpace {
    Pixel,
    Unit,
}

/// A sequence of frames as stored in a dataset file.
#[derive(Clone, Debug, PartialEq)]
pub struct SignSample {
    pub id: String,
    pub frames: Vec<PoseFrame>,
    pub label: Option<usize>,
    pub signer: Option<String>,
}

/// A training or evaluation sample whose label may be read.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub frames: Vec<PoseFrame>,
    pub label: usize,
}

/// A sample whose label is hidden. There is deliberately no label accessor.
#[derive(Clone, Debug, PartialEq)]
pub struct UnlabeledSample {
    id: String,
    frames: Vec<PoseFrame>,
}

impl UnlabeledSample {
    pub fn new(id: impl Into<String>, frames: Vec<PoseFrame>) -> Self {
        UnlabeledSample {
            id: id.into(),
            frames,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut Vec<PoseFrame> {
        &mut self.frames
    }

    /// Attaches a pseudo-label, turning the sample into a training sample.
    pub fn with_label(self, label: usize) -> LabeledSample {
        LabeledSample {
            id: self.id,
            frames: self.frames,
            label,
        }
    }
}

/// True labels of the unlabeled pool, kept apart for evaluation-only audits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditLabels {
    labels: BTreeMap<String, usize>,
}

impl AuditLabels {
    pub fn insert(&mut self, id: String, label: usize) {
        self.labels.insert(id, label);
    }

    pub fn true_label(&self, id: &str) -> Option<usize> {
        self.labels.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A loaded dataset: header information plus samples in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub classes: Vec<String>,
    pub coord_space: CoordSpace,
    pub samples: Vec<SignSample>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Samples per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for s in &self.samples {
            if let Some(l) = s.label {
                counts[l] += 1;
            }
        }
        counts
    }
}

/// The four disjoint sample sets used by one experiment.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub labeled: Vec<LabeledSample>,
    pub unlabeled: Vec<UnlabeledSample>,
    pub validation: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub class_names: Vec<String>,
    pub audit: AuditLabels,
}

impl DatasetSplit {
    /// Stratified 4:1:1 split followed by label masking of the training part.
    pub fn build(dataset: &Dataset, labeled_fraction: f64, seed: u64) -> Result<Self> {
        let parts = split_train_val_test(dataset, (4, 1, 1), seed)?;
        let masked = mask_labels(parts.train, dataset.num_classes(), labeled_fraction, seed)?;
        Ok(DatasetSplit {
            labeled: masked.labeled,
            unlabeled: masked.unlabeled,
            validation: parts.validation,
            test: parts.test,
            class_names: dataset.classes.clone(),
            audit: masked.audit,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

/// Which joint indices play which anatomical role.
///
/// The default layout: 0 nose, 1 neck, 2/3 left/right shoulder,
/// 4/5 left/right elbow, 6/7 left/right wrist, 8/9 left/right ear,
/// 10/11 left/right eye, 12–32 left hand (12 is the hand wrist),
/// 33–53 right hand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLayout {
    /// Landmarks whose vertical extent estimates head height.
    pub head: Vec<usize>,
    pub left_arm: ArmJoints,
    pub right_arm: ArmJoints,
    pub left_hand: Vec<usize>,
    pub right_hand: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmJoints {
    pub shoulder: usize,
    pub elbow: usize,
    pub wrist: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Default for JointLayout {
    fn default() -> Self {
        JointLayout {
            head: vec![0, 8, 9, 10, 11],
            left_arm: ArmJoints {
                shoulder: 2,
                elbow: 4,
                wrist: 6,
            },
            right_arm: ArmJoints {
                shoulder: 3,
                elbow: 5,
                wrist: 7,
            },
            left_hand: (12..33).collect(),
            right_hand: (33..54).collect(),
        }
    }
}

impl JointLayout {
    pub fn validate(&self) -> Result<()> {
        let arms = [self.left_arm, self.right_arm];
        let all = self
            .head
            .iter()
            .chain(&self.left_hand)
            .chain(&self.right_hand)
            .copied()
            .chain(arms.iter().flat_map(|a| [a.shoulder, a.elbow, a.wrist]));
        for j in all {
            if j >= NUM_JOINTS {
                return Err(Error::Config(format!("joint index {j} out of range")));
            }
        }
        if self.head.is_empty() {
            return Err(Error::Config("joint layout needs head landmarks".into()));
        }
        if self.left_hand.iter().any(|j| self.right_hand.contains(j)) {
            return Err(Error::Config("left and right hand joints overlap".into()));
        }
        Ok(())
    }

    pub fn arm(&self, side: Side) -> ArmJoints {
        match side {
            Side::Left => self.left_arm,
            Side::Right => self.right_arm,
        }
    }

    pub fn hand(&self, side: Side) -> &[usize] {
        match side {
            Side::Left => &self.left_hand,
            Side::Right => &self.right_hand,
        }
    }

    pub fn is_hand_joint(&self, j: usize) -> bool {
        self.left_hand.contains(&j) || self.right_hand.contains(&j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_half_missing_joint() {
        let mut c = vec![0.0; FRAME_DIM];
        c[4] = f64::NAN;
        assert!(PoseFrame::new(&c).is_err());
        c[5] = f64::NAN;
        let f = PoseFrame::new(&c).unwrap();
        assert!(f.is_missing(2));
        assert_eq!(f.joint(2), None);
    }

    #[test]
    fn frame_rejects_wrong_size_and_infinity() {
        assert!(PoseFrame::new(&[0.0; 106]).is_err());
        let mut c = vec![0.0; FRAME_DIM];
        c[0] = f64::INFINITY;
        assert!(PoseFrame::new(&c).is_err());
    }

    #[test]
    fn fill_missing_gives_origin() {
        let mut f = PoseFrame::missing();
        f.fill_missing();
        assert_eq!(f, PoseFrame::zeros());
    }

    #[test]
    fn default_layout_is_valid() {
        let layout = JointLayout::default();
        layout.validate().unwrap();
        assert_eq!(layout.left_hand.len(), 21);
        assert_eq!(layout.right_hand.len(), 21);
        let mut bad = layout.clone();
        bad.right_hand.push(12);
        assert!(bad.validate().is_err());
    }
}
