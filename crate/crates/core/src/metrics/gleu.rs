//! Corpus GLEU for grammatical error correction.
//!
//! For each reference index the corpus is scored against that reference of
//! every sentence: n-gram matches with the reference are credited, and
//! matches with source n-grams that the reference does not contain are
//! subtracted. Precisions for n = 1..4 are combined geometrically with a
//! brevity penalty. The final score is the mean over reference indices, so
//! no sampling is involved. Orders for which the corpus has no hypothesis
//! n-grams are left out of the geometric mean.

use super::ngram::{NgramProfile, SentenceGrams, MAX_ORDER};

/// Sufficient statistics for one (sentence, reference) pairing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GleuStats {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
}

impl std::ops::AddAssign for GleuStats {
    fn add_assign(&mut self, o: Self) {
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        for k in 0..MAX_ORDER {
            self.matches[k] += o.matches[k];
            self.totals[k] += o.totals[k];
        }
    }
}

pub fn sentence_stats(source: &SentenceGrams, hyp: &SentenceGrams, reference: &SentenceGrams) -> GleuStats {
    let mut stats = GleuStats {
        hyp_len: hyp.len,
        ref_len: reference.len,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let h = hyp.order(n);
        let r = reference.order(n);
        let s = source.order(n);
        let mut credit = 0usize;
        let mut penalty = 0usize;
        for (g, &hc) in h {
            credit += hc.min(r.get(g).copied().unwrap_or(0)) as usize;
            if !r.contains_key(g) {
                penalty += hc.min(s.get(g).copied().unwrap_or(0)) as usize;
            }
        }
        stats.matches[n - 1] = credit.saturating_sub(penalty);
        stats.totals[n - 1] = hyp.total(n);
    }
    stats
}

/// Score in [0, 100] from summed statistics.
pub fn gleu_from_stats(stats: &GleuStats) -> f64 {
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
    let brevity = (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).min(0.0);
    100.0 * (brevity + log_precision / orders as f64).exp()
}

/// Corpus GLEU over profiles that each carry at least one reference.
pub fn corpus_gleu(profiles: &[NgramProfile]) -> f64 {
    let max_refs = profiles.iter().map(|p| p.references.len()).max().unwrap_or(0);
    if max_refs == 0 {
        return 0.0;
    }
    let total: f64 = (0..max_refs)
        .map(|j| {
            let mut stats = GleuStats::default();
            for p in profiles {
                let reference = &p.references[j % p.references.len()];
                stats += sentence_stats(&p.source, &p.hypothesis, reference);
            }
            gleu_from_stats(&stats)
        })
        .sum();
    total / max_refs as f64
}
