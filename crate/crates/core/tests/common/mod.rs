#![allow(dead_code)]

pub mod oracle;

use rand::Rng;

pub const VOCAB: [&str; 10] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn random_sentence(rng: &mut impl Rng, min: usize, max: usize) -> Vec<String> {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect()
}

/// A random (src, hyp, refs) triple with sentences of at most 8 tokens.
pub fn random_item(rng: &mut impl Rng) -> oracle::Item {
    let src = random_sentence(rng, 1, 8);
    let hyp = random_sentence(rng, 1, 8);
    let n_refs = rng.gen_range(1..=4);
    let refs = (0..n_refs).map(|_| random_sentence(rng, 1, 8)).collect();
    (src, hyp, refs)
}
