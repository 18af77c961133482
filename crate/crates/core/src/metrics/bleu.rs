//! 4-gram BLEU with clipped multi-reference counts and the closest-length
//! brevity penalty. Orders with no hypothesis n-grams are dropped from the
//! geometric mean; no smoothing otherwise.

use super::ngram::{SentenceGrams, MAX_ORDER};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
}

impl std::ops::AddAssign for BleuStats {
    fn add_assign(&mut self, o: Self) {
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        for k in 0..MAX_ORDER {
            self.matches[k] += o.matches[k];
            self.totals[k] += o.totals[k];
        }
    }
}

/// `refs` must be non-empty.
pub fn sentence_stats(hyp: &SentenceGrams, refs: &[&SentenceGrams]) -> BleuStats {
    // closest reference length, ties broken toward the shorter one
    let ref_len = refs
        .iter()
        .map(|r| r.len)
        .min_by_key(|&l| (l.abs_diff(hyp.len), l))
        .unwrap_or(0);
    let mut stats = BleuStats {
        hyp_len: hyp.len,
        ref_len,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let mut matched = 0usize;
        for (g, &c) in hyp.order(n) {
            let max_ref = refs
                .iter()
                .map(|r| r.order(n).get(g).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            matched += c.min(max_ref) as usize;
        }
        stats.matches[n - 1] = matched;
        stats.totals[n - 1] = hyp.total(n);
    }
    stats
}

pub fn bleu_from_stats(stats: &BleuStats) -> f64 {
    if stats.hyp_len == 0 {
        return 0.0;
    }
    let mut log_precision = 0.0;
    let mut orders = 0usize;
    for k in 0..MAX_ORDER {
        if stats.totals[k] == 0 {
            continue;
        }
        if stats.matches[k] == 0 {
            return 0.0;
        }
        log_precision += (stats.matches[k] as f64 / stats.totals[k] as f64).ln();
        orders += 1;
    }
    let brevity = if stats.hyp_len >= stats.ref_len {
        0.0
    } else {
        1.0 - stats.ref_len as f64 / stats.hyp_len as f64
    };
    100.0 * (brevity + log_precision / orders as f64).exp()
}
