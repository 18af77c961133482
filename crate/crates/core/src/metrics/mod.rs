//! Reference-based text-editing metrics.
//!
//! Every kernel works on [`NgramProfile`] values built from the shared
//! metric tokenizer. Corpus passes build profiles in parallel and reduce in
//! input order, so results are bit-for-bit reproducible.

pub mod bleu;
pub mod gleu;
pub mod ngram;
pub mod sari;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ngram::{NgramProfile, SentenceGrams, MAX_ORDER};
pub use sari::SariComponents;

use crate::error::{Error, Result};
use crate::text::{normalize_text, tokenize, NormalizationPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricInput {
    pub source: String,
    pub hypothesis: String,
    #[serde(default)]
    pub references: Vec<String>,
}

impl MetricInput {
    pub fn new(source: impl Into<String>, hypothesis: impl Into<String>, references: Vec<String>) -> Self {
        Self {
            source: source.into(),
            hypothesis: hypothesis.into(),
            references,
        }
    }

    pub fn profile(&self) -> NgramProfile {
        NgramProfile::new(&self.source, &self.hypothesis, &self.references)
    }

    fn require_references(&self, metric: &'static str) -> Result<()> {
        if self.references.is_empty() {
            Err(Error::metric(metric, "input has no references"))
        } else {
            Ok(())
        }
    }
}

/// What a Self-BLEU hypothesis is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Against {
    Source,
    References,
}

impl std::str::FromStr for Against {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "source" | "src" => Ok(Self::Source),
            "references" | "refs" | "reference" => Ok(Self::References),
            other => Err(Error::validation("against", format!("unknown comparison set `{other}`"))),
        }
    }
}

fn require_nonempty(inputs: &[MetricInput], metric: &'static str) -> Result<()> {
    if inputs.is_empty() {
        Err(Error::metric(metric, "empty corpus"))
    } else {
        Ok(())
    }
}

pub fn sari_components(input: &MetricInput) -> Result<SariComponents> {
    input.require_references("sari")?;
    Ok(sari::sari_components(&input.profile()))
}

/// Sentence SARI in [0, 100].
pub fn sari(input: &MetricInput) -> Result<f64> {
    Ok(sari_components(input)?.score())
}

/// Corpus SARI: the mean of sentence scores.
pub fn corpus_sari(inputs: &[MetricInput]) -> Result<f64> {
    require_nonempty(inputs, "sari")?;
    for input in inputs {
        input.require_references("sari")?;
    }
    let scores: Vec<f64> = inputs.par_iter().map(|i| sari::sari_components(&i.profile()).score()).collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn gleu(inputs: &[MetricInput]) -> Result<f64> {
    require_nonempty(inputs, "gleu")?;
    for input in inputs {
        input.require_references("gleu")?;
    }
    let profiles: Vec<NgramProfile> = inputs.par_iter().map(MetricInput::profile).collect();
    Ok(gleu::corpus_gleu(&profiles))
}

/// Percentage of hypotheses equal to `references[0]` after normalization.
pub fn exact_match(inputs: &[MetricInput]) -> Result<f64> {
    require_nonempty(inputs, "exact_match")?;
    let policy = NormalizationPolicy::default();
    let mut hits = 0usize;
    for input in inputs {
        let target = input
            .references
            .first()
            .ok_or_else(|| Error::metric("exact_match", "input has no target"))?;
        if normalize_text(&input.hypothesis, &policy) == normalize_text(target, &policy) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / inputs.len() as f64)
}

fn self_bleu_stats(input: &MetricInput, against: Against) -> Result<bleu::BleuStats> {
    let comparison: Vec<&str> = match against {
        Against::Source => vec![input.source.as_str()],
        Against::References => input.references.iter().map(String::as_str).collect(),
    };
    if comparison.is_empty() {
        return Err(Error::metric("self_bleu", "empty comparison set"));
    }
    let profile = NgramProfile::new("", &input.hypothesis, &comparison);
    let refs: Vec<&SentenceGrams> = profile.references.iter().collect();
    Ok(bleu::sentence_stats(&profile.hypothesis, &refs))
}

/// Sentence BLEU of the hypothesis against its source or its references.
pub fn self_bleu(input: &MetricInput, against: Against) -> Result<f64> {
    Ok(bleu::bleu_from_stats(&self_bleu_stats(input, against)?))
}

/// Corpus-level Self-BLEU: statistics are summed before the geometric mean.
pub fn corpus_self_bleu(inputs: &[MetricInput], against: Against) -> Result<f64> {
    require_nonempty(inputs, "self_bleu")?;
    let stats = inputs
        .par_iter()
        .map(|i| self_bleu_stats(i, against))
        .collect::<Result<Vec<_>>>()?;
    let mut total = bleu::BleuStats::default();
    for s in stats {
        total += s;
    }
    Ok(bleu::bleu_from_stats(&total))
}

/// Mean percentage length reduction in tokens, clamped below at 0 per input.
pub fn compression_ratio(inputs: &[MetricInput]) -> Result<f64> {
    require_nonempty(inputs, "compression_ratio")?;
    let mut total = 0.0;
    for input in inputs {
        let src = tokenize(&input.source).len();
        if src == 0 {
            return Err(Error::metric("compression_ratio", "empty source"));
        }
        let hyp = tokenize(&input.hypothesis).len();
        total += (1.0 - hyp as f64 / src as f64).max(0.0);
    }
    Ok(100.0 * total / inputs.len() as f64)
}
