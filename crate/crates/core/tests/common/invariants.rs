//! Set-algebra checks on a finished pseudo-labeling run.

use std::collections::BTreeSet;

use sslr::data::DatasetSplit;
use sslr::ssl::{SelectionMode, SslReport};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn check_run(split: &DatasetSplit, report: &SslReport, mode: SelectionMode) -> Result<(), String> {
    let classes = split.num_classes();
    let labeled: BTreeSet<&str> = split.labeled.iter().map(|s| s.id.as_str()).collect();
    let pool: BTreeSet<&str> = split.unlabeled.iter().map(|s| s.id()).collect();
    let total = labeled.len() + pool.len();
    let cap = if mode == SelectionMode::GlobalMax { 1 } else { classes };
    ensure!(report.cycles.len() - 1 <= pool.len(), "{} cycles for a pool of {}", report.cycles.len() - 1, pool.len());
    let mut picked = BTreeSet::new();
    for (k, c) in report.cycles.iter().enumerate() {
        ensure!(c.cycle == k, "cycle {} recorded at position {k}", c.cycle);
        ensure!(c.labeled + c.unlabeled == total, "cycle {k}: |L|+|U| = {}", c.labeled + c.unlabeled);
        ensure!(c.batch.len() <= cap, "cycle {k}: batch of {}", c.batch.len());
        if k > 0 {
            ensure!(!c.batch.is_empty(), "cycle {k}: empty batch");
            ensure!(
                c.labeled == report.cycles[k - 1].labeled + c.batch.len(),
                "cycle {k}: |L| did not grow by the batch size"
            );
        }
        let used: BTreeSet<usize> = c.batch.iter().map(|p| p.label).collect();
        ensure!(used.len() == c.batch.len(), "cycle {k}: a class was picked twice");
        for p in &c.batch {
            ensure!(pool.contains(p.id.as_str()), "cycle {k}: {} was not unlabeled", p.id);
            ensure!(picked.insert(p.id.clone()), "{} picked twice", p.id);
        }
    }
    let originals: BTreeSet<&str> = report.final_labels.iter().filter(|l| !l.pseudo).map(|l| l.id.as_str()).collect();
    ensure!(originals == labeled, "original labels changed");
    let pseudo: BTreeSet<String> = report.final_labels.iter().filter(|l| l.pseudo).map(|l| l.id.clone()).collect();
    ensure!(pseudo == picked, "pseudo-labeled ids differ from the batches");
    ensure!(report.final_labels.len() == total, "final label count {}", report.final_labels.len());
    Ok(())
}
