//! Stratified splitting, label masking and class subsetting.
//!
//! Every per-class selection first sorts the class members by sample id and
//! then shuffles with a stream derived from `(seed, class)`, so membership
//! never depends on input order.

use log::warn;
use rand::seq::SliceRandom;

use super::{AuditLabels, Dataset, LabeledSample, SignSample, UnlabeledSample};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Clone, Debug)]
pub struct TrainValTest {
    pub train: Vec<LabeledSample>,
    pub validation: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
}

#[derive(Clone, Debug)]
pub struct MaskedTrainSet {
    pub labeled: Vec<LabeledSample>,
    pub unlabeled: Vec<UnlabeledSample>,
    pub audit: AuditLabels,
}

fn by_class(samples: Vec<LabeledSample>, num_classes: usize) -> Vec<Vec<LabeledSample>> {
    let mut groups: Vec<Vec<LabeledSample>> = vec![Vec::new(); num_classes];
    for s in samples {
        let l = s.label;
        groups[l].push(s);
    }
    for g in &mut groups {
        g.sort_by(|a, b| a.id.cmp(&b.id));
    }
    groups
}

fn labeled_samples(dataset: &Dataset) -> Result<Vec<LabeledSample>> {
    dataset
        .samples
        .iter()
        .map(|s: &SignSample| {
            let label = s.label.ok_or_else(|| {
                Error::Dataset(format!("sample {:?} has no label; cannot split", s.id))
            })?;
            Ok(LabeledSample {
                id: s.id.clone(),
                frames: s.frames.clone(),
                label,
            })
        })
        .collect()
}

/// Per-class stratified split in the proportions `ratio` (train, val, test).
///
/// Validation and test each get `round(n · share)` samples, at least one;
/// training keeps the rest.
pub fn split_train_val_test(
    dataset: &Dataset,
    ratio: (u32, u32, u32),
    seed: u64,
) -> Result<TrainValTest> {
    let (rt, rv, rs) = ratio;
    if rt == 0 || rv == 0 || rs == 0 {
        return Err(Error::Usage(format!("split ratio {ratio:?} has a zero part")));
    }
    let total = (rt + rv + rs) as f64;
    let groups = by_class(labeled_samples(dataset)?, dataset.num_classes());
    let mut out = TrainValTest {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for (class, mut members) in groups.into_iter().enumerate() {
        let n = members.len();
        let name = &dataset.classes[class];
        if n < 3 {
            return Err(Error::Dataset(format!(
                "class {name:?} has {n} samples; at least 3 are needed to split"
            )));
        }
        if n < 6 {
            warn!("class {name:?} has only {n} samples; split will be coarse");
        }
        members.shuffle(&mut rng_for(seed, &format!("split/{class}")));
        let n_val = ((n as f64 * rv as f64 / total).round() as usize).max(1);
        let n_test = ((n as f64 * rs as f64 / total).round() as usize).max(1);
        let n_train = n - n_val - n_test;
        let mut it = members.into_iter();
        out.train.extend(it.by_ref().take(n_train));
        out.validation.extend(it.by_ref().take(n_val));
        out.test.extend(it);
    }
    for set in [&mut out.train, &mut out.validation, &mut out.test] {
        set.sort_by(|a, b| a.id.cmp(&b.id));
    }
    Ok(out)
}

/// Keeps `ceil(fraction · n_c)` samples of each class labeled (at least one)
/// and hides the labels of the rest.
pub fn mask_labels(
    train: Vec<LabeledSample>,
    num_classes: usize,
    fraction: f64,
    seed: u64,
) -> Result<MaskedTrainSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Usage(format!(
            "labeled fraction must be in (0, 1], got {fraction}"
        )));
    }
    if let Some(s) = train.iter().find(|s| s.label >= num_classes) {
        return Err(Error::Dataset(format!(
            "sample {:?} has label {} but there are {num_classes} classes",
            s.id, s.label
        )));
    }
    let groups = by_class(train, num_classes);
    let mut out = MaskedTrainSet {
        labeled: Vec::new(),
        unlabeled: Vec::new(),
        audit: AuditLabels::default(),
    };
    for (class, mut members) in groups.into_iter().enumerate() {
        let n = members.len();
        if n == 0 {
            return Err(Error::Dataset(format!(
                "class {class} has no training samples; cannot mask labels"
            )));
        }
        members.shuffle(&mut rng_for(seed, &format!("mask/{class}")));
        // The small slack keeps 0.07 · 100 from rounding up to 8.
        let keep = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
        let mut it = members.into_iter();
        out.labeled.extend(it.by_ref().take(keep));
        for s in it {
            out.audit.insert(s.id.clone(), s.label);
            out.unlabeled.push(UnlabeledSample::new(s.id, s.frames));
        }
    }
    out.labeled.sort_by(|a, b| a.id.cmp(&b.id));
    out.unlabeled.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(out)
}

/// Keeps the first `num_classes` classes in header order.
pub fn subset_classes(dataset: &Dataset, num_classes: usize) -> Result<Dataset> {
    if num_classes == 0 || num_classes > dataset.num_classes() {
        return Err(Error::Usage(format!(
            "requested {num_classes} classes but the dataset has {}",
            dataset.num_classes()
        )));
    }
    Ok(Dataset {
        classes: dataset.classes[..num_classes].to_vec(),
        coord_space: dataset.coord_space,
        samples: dataset
            .samples
            .iter()
            .filter(|s| s.label.map_or(false, |l| l < num_classes))
            .cloned()
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CoordSpace, PoseFrame};

    fn dataset(counts: &[usize]) -> Dataset {
        let mut samples = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                samples.push(SignSample {
                    id: format!("c{c}_{i:03}"),
                    frames: vec![PoseFrame::zeros()],
                    label: Some(c),
                    signer: None,
                });
            }
        }
        Dataset {
            classes: (0..counts.len()).map(|c| format!("class{c}")).collect(),
            coord_space: CoordSpace::Unit,
            samples,
        }
    }

    fn sizes(t: &TrainValTest) -> (usize, usize, usize) {
        (t.train.len(), t.validation.len(), t.test.len())
    }

    #[test]
    fn six_samples_split_four_one_one() {
        let t = split_train_val_test(&dataset(&[6]), (4, 1, 1), 3).unwrap();
        assert_eq!(sizes(&t), (4, 1, 1));
        let t = split_train_val_test(&dataset(&[12]), (4, 1, 1), 3).unwrap();
        assert_eq!(sizes(&t), (8, 2, 2));
    }

    #[test]
    fn tiny_class_refused_with_name() {
        let e = split_train_val_test(&dataset(&[6, 2]), (4, 1, 1), 0).unwrap_err();
        assert!(e.to_string().contains("class1"), "{e}");
    }

    #[test]
    fn split_is_seeded() {
        let ds = dataset(&[30, 30]);
        let a = split_train_val_test(&ds, (4, 1, 1), 11).unwrap();
        let b = split_train_val_test(&ds, (4, 1, 1), 11).unwrap();
        let c = split_train_val_test(&ds, (4, 1, 1), 12).unwrap();
        let ids = |v: &[LabeledSample]| v.iter().map(|s| s.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a.test), ids(&b.test));
        assert_ne!(ids(&a.test), ids(&c.test));
    }

    #[test]
    fn full_fraction_leaves_nothing_unlabeled() {
        let t = split_train_val_test(&dataset(&[12, 12]), (4, 1, 1), 0).unwrap();
        let m = mask_labels(t.train, 2, 1.0, 0).unwrap();
        assert!(m.unlabeled.is_empty());
        assert_eq!(m.labeled.len(), 16);
    }

    #[test]
    fn quarter_of_balanced_hundred() {
        let train: Vec<LabeledSample> = (0..100)
            .map(|i| LabeledSample {
                id: format!("s{i:03}"),
                frames: vec![PoseFrame::zeros()],
                label: i % 5,
            })
            .collect();
        let m = mask_labels(train, 5, 0.25, 9).unwrap();
        assert_eq!(m.labeled.len(), 25);
        assert_eq!(m.unlabeled.len(), 75);
        for c in 0..5 {
            assert_eq!(m.labeled.iter().filter(|s| s.label == c).count(), 5);
        }
        assert_eq!(m.audit.len(), 75);
    }

    #[test]
    fn mask_rejects_bad_fraction_and_empty_class() {
        let t = split_train_val_test(&dataset(&[6]), (4, 1, 1), 0).unwrap();
        assert!(mask_labels(t.train.clone(), 1, 0.0, 0).is_err());
        assert!(mask_labels(t.train.clone(), 1, 1.5, 0).is_err());
        assert!(mask_labels(t.train, 2, 0.5, 0).is_err());
    }

    #[test]
    fn subset_keeps_first_classes() {
        let ds = dataset(&[3, 4, 5, 6]);
        let sub = subset_classes(&ds, 2).unwrap();
        assert_eq!(sub.classes, vec!["class0", "class1"]);
        assert_eq!(sub.samples.len(), 7);
        assert_eq!(subset_classes(&ds, 4).unwrap(), ds);
        assert!(subset_classes(&ds, 5).is_err());
    }
}
