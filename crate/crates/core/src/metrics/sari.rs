//! SARI: mean of ADD (F1), KEEP (F1) and DELETE (precision) n-gram scores,
//! n = 1..4, against a multi-reference set.
//!
//! Source and hypothesis counts are scaled by the number of references so
//! that KEEP and DELETE credit is fractional in how many references agree.
//! An operation whose candidate set and reference set are both empty scores 1.

use std::collections::HashMap;

use super::ngram::{Ngram, NgramCounts, NgramProfile, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SariComponents {
    pub add: f64,
    pub keep: f64,
    pub delete: f64,
}

impl SariComponents {
    pub fn score(&self) -> f64 {
        100.0 * (self.add + self.keep + self.delete) / 3.0
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision > 0.0 || recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn mean_or_zero(total: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

fn order_scores(source: &NgramCounts, hyp: &NgramCounts, refs: &[&NgramCounts]) -> (f64, f64, f64) {
    let r = refs.len() as u32;
    let mut ref_all: HashMap<Ngram, u32> = HashMap::new();
    for counts in refs {
        for (g, c) in counts.iter() {
            *ref_all.entry(*g).or_default() += c;
        }
    }
    let ref_count = |g: &Ngram| ref_all.get(g).copied().unwrap_or(0);

    // KEEP
    let mut keep_size = 0usize;
    let mut keep_precision_sum = 0.0;
    let mut keep_all_size = 0usize;
    let mut keep_recall_sum = 0.0;
    // DELETE
    let mut del_size = 0usize;
    let mut del_precision_sum = 0.0;
    let mut del_all_size = 0usize;

    for (g, &s) in source {
        let s_rep = s * r;
        let c_rep = hyp.get(g).copied().unwrap_or(0) * r;
        let rc = ref_count(g);
        let keep = s_rep.min(c_rep);
        let keep_good = keep.min(rc);
        let keep_all = s_rep.min(rc);
        if keep > 0 {
            keep_size += 1;
            keep_precision_sum += f64::from(keep_good) / f64::from(keep);
        }
        if keep_all > 0 {
            keep_all_size += 1;
            keep_recall_sum += f64::from(keep_good) / f64::from(keep_all);
        }

        let del = s_rep.saturating_sub(c_rep);
        if del > 0 {
            del_size += 1;
            let del_good = del.saturating_sub(rc);
            del_precision_sum += f64::from(del_good) / f64::from(del);
        }
        if s_rep > rc {
            del_all_size += 1;
        }
    }

    let keep_score = if keep_size == 0 && keep_all_size == 0 {
        1.0
    } else {
        f1(
            mean_or_zero(keep_precision_sum, keep_size),
            mean_or_zero(keep_recall_sum, keep_all_size),
        )
    };
    let del_score = if del_size == 0 && del_all_size == 0 {
        1.0
    } else {
        mean_or_zero(del_precision_sum, del_size)
    };

    // ADD works on sets of grams absent from the source.
    let add_size = hyp.keys().filter(|g| !source.contains_key(g)).count();
    let add_good = hyp
        .keys()
        .filter(|g| !source.contains_key(g) && ref_all.contains_key(g))
        .count();
    let add_all_size = ref_all.keys().filter(|g| !source.contains_key(g)).count();
    let add_score = if add_size == 0 && add_all_size == 0 {
        1.0
    } else {
        f1(
            mean_or_zero(add_good as f64, add_size),
            mean_or_zero(add_good as f64, add_all_size),
        )
    };

    (add_score, keep_score, del_score)
}

/// Per-operation scores in [0, 1] for one sentence. `profile` must carry at
/// least one reference.
pub fn sari_components(profile: &NgramProfile) -> SariComponents {
    let mut add = 0.0;
    let mut keep = 0.0;
    let mut delete = 0.0;
    for n in 1..=MAX_ORDER {
        let refs: Vec<&NgramCounts> = profile.references.iter().map(|r| r.order(n)).collect();
        let (a, k, d) = order_scores(profile.source.order(n), profile.hypothesis.order(n), &refs);
        add += a;
        keep += k;
        delete += d;
    }
    let orders = MAX_ORDER as f64;
    SariComponents {
        add: add / orders,
        keep: keep / orders,
        delete: delete / orders,
    }
}
