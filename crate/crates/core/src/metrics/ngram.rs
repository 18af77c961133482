use std::collections::HashMap;

use crate::text::tokenize;

pub const MAX_ORDER: usize = 4;

/// An n-gram over interned token ids (n <= 4). Unused slots are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ngram {
    len: u8,
    ids: [u32; MAX_ORDER],
}

pub type NgramCounts = HashMap<Ngram, u32>;

/// Per-order n-gram multisets of one tokenized sentence.
#[derive(Debug, Clone, Default)]
pub struct SentenceGrams {
    pub len: usize,
    /// `orders[n - 1]` holds the n-gram counts.
    pub orders: [NgramCounts; MAX_ORDER],
}

impl SentenceGrams {
    fn from_ids(ids: &[u32]) -> Self {
        let mut orders: [NgramCounts; MAX_ORDER] = Default::default();
        for (k, counts) in orders.iter_mut().enumerate() {
            let n = k + 1;
            for w in ids.windows(n) {
                let mut gram = Ngram { len: n as u8, ids: [0; MAX_ORDER] };
                gram.ids[..n].copy_from_slice(w);
                *counts.entry(gram).or_default() += 1;
            }
        }
        Self { len: ids.len(), orders }
    }

    pub fn order(&self, n: usize) -> &NgramCounts {
        &self.orders[n - 1]
    }

    /// Number of n-grams of order `n`, i.e. `max(len + 1 - n, 0)`.
    pub fn total(&self, n: usize) -> usize {
        (self.len + 1).saturating_sub(n)
    }
}

#[derive(Default)]
struct Vocab<'a> {
    ids: HashMap<&'a str, u32>,
}

impl<'a> Vocab<'a> {
    fn intern(&mut self, tokens: &'a [String]) -> Vec<u32> {
        tokens
            .iter()
            .map(|t| {
                let next = self.ids.len() as u32 + 1;
                *self.ids.entry(t.as_str()).or_insert(next)
            })
            .collect()
    }
}

/// N-gram multisets for a source, a hypothesis and its references, interned
/// against one shared vocabulary so grams compare across the three sides.
#[derive(Debug, Clone)]
pub struct NgramProfile {
    pub source: SentenceGrams,
    pub hypothesis: SentenceGrams,
    pub references: Vec<SentenceGrams>,
}

impl NgramProfile {
    pub fn new<S: AsRef<str>>(source: &str, hypothesis: &str, references: &[S]) -> Self {
        let src = tokenize(source);
        let hyp = tokenize(hypothesis);
        let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r.as_ref())).collect();
        Self::from_tokens(&src, &hyp, &refs)
    }

    pub fn from_tokens(source: &[String], hypothesis: &[String], references: &[Vec<String>]) -> Self {
        let mut vocab = Vocab::default();
        let source = SentenceGrams::from_ids(&vocab.intern(source));
        let hypothesis = SentenceGrams::from_ids(&vocab.intern(hypothesis));
        let references = references
            .iter()
            .map(|r| SentenceGrams::from_ids(&vocab.intern(r)))
            .collect();
        Self {
            source,
            hypothesis,
            references,
        }
    }
}
