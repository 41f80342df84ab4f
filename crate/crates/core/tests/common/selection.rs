//! Pseudo-label selection restated per sample: every class nominates its
//! most confident sample, and each nominated sample keeps the strongest of
//! the classes that nominated it.

use std::collections::BTreeMap;

/// `(sample, class, confidence)` in descending confidence, then class.
pub fn select(ids: &[&str], probs: &[Vec<f64>], global_max: bool) -> Vec<(usize, usize, f64)> {
    let classes = probs[0].len();
    let mut by_sample: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for c in 0..classes {
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by(|&a, &b| probs[b][c].total_cmp(&probs[a][c]).then(ids[a].cmp(ids[b])));
        let top = order[0];
        if probs[top][c] > 0.0 {
            by_sample.entry(top).or_default().push((c, probs[top][c]));
        }
    }
    if global_max {
        let best = by_sample
            .iter()
            .flat_map(|(&s, v)| v.iter().map(move |&(c, p)| (s, c, p)))
            .min_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)));
        return best.into_iter().collect();
    }
    let mut out: Vec<(usize, usize, f64)> = by_sample
        .into_iter()
        .map(|(s, v)| {
            let &(c, p) = v
                .iter()
                .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
                .unwrap();
            (s, c, p)
        })
        .collect();
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)));
    out
}
