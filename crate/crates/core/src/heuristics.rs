//! Scalar heuristics over (source, target) pairs and the bound-based filters
//! that select pairs for each task.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::model::EditPair;
use crate::text::tokenize;

const SHIPPED_FREQUENCIES: &str = include_str!("../data/word_freq_en.tsv");
const SHIPPED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
const SHIPPED_PRESETS: &str = include_str!("../data/filter_presets.toml");

/// Annotation keys carrying precomputed dependency-tree depths.
pub const SOURCE_DEPTH_KEY: &str = "src_depth";
pub const TARGET_DEPTH_KEY: &str = "tgt_depth";

/// |multiset(source) ∩ multiset(target)| / |source|.
pub fn old_word_retention<S: AsRef<str>>(source: &[S], target: &[S]) -> Result<f64> {
    if source.is_empty() {
        return Err(Error::EmptySource);
    }
    let mut remaining: HashMap<&str, usize> = HashMap::new();
    for t in target {
        *remaining.entry(t.as_ref()).or_default() += 1;
    }
    let mut kept = 0usize;
    for s in source {
        if let Some(n) = remaining.get_mut(s.as_ref()) {
            if *n > 0 {
                *n -= 1;
                kept += 1;
            }
        }
    }
    Ok(kept as f64 / source.len() as f64)
}

/// Levenshtein distance with unit costs over any comparable sequence.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(x != y);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn word_edit_distance<S: AsRef<str>>(source: &[S], target: &[S]) -> usize {
    let a: Vec<&str> = source.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = target.iter().map(AsRef::as_ref).collect();
    edit_distance(&a, &b)
}

pub fn char_edit_distance(source: &str, target: &str) -> usize {
    let a: Vec<char> = source.chars().collect();
    let b: Vec<char> = target.chars().collect();
    edit_distance(&a, &b)
}

/// Token counts from a reference corpus, used to rank words by frequency.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    /// Counts sorted descending, for rank lookup.
    sorted: Vec<u64>,
    floor: u64,
}

impl FrequencyTable {
    pub fn new(counts: HashMap<String, u64>, floor: u64) -> Self {
        let mut sorted: Vec<u64> = counts.values().copied().collect();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        Self { counts, sorted, floor }
    }

    /// Two columns per line, `token<whitespace>count`; `#` lines ignored.
    pub fn parse(text: &str, floor: u64) -> Result<Self> {
        let mut counts = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(token), Some(count), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Format {
                    path: "<frequency table>".into(),
                    line: i + 1,
                    reason: "expected `token count`".into(),
                });
            };
            let count: u64 = count.parse().map_err(|_| Error::Format {
                path: "<frequency table>".into(),
                line: i + 1,
                reason: format!("bad count `{count}`"),
            })?;
            counts.insert(token.to_lowercase(), count);
        }
        Ok(Self::new(counts, floor))
    }

    pub fn load(path: &Path, floor: u64) -> Result<Self> {
        let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, floor).map_err(|e| match e {
            Error::Format { line, reason, .. } => Error::Format {
                path: path.to_owned(),
                line,
                reason,
            },
            other => other,
        })
    }

    /// Frequency table derived from a public English word-frequency list
    /// (counts per billion words), with an out-of-vocabulary floor of 1.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_FREQUENCIES, 1).expect("shipped frequency table parses")
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(self.floor)
    }

    /// Competition rank: 1 + number of vocabulary words strictly more frequent.
    pub fn rank(&self, token: &str) -> usize {
        let c = self.count(token);
        1 + self.sorted.partition_point(|&x| x > c)
    }
}

pub fn shipped_stopwords() -> HashSet<String> {
    parse_word_list(SHIPPED_STOPWORDS)
}

pub fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Pluggable lexical-complexity ratio between a target and its source.
pub trait ComplexityScorer: Send + Sync {
    fn complexity_ratio(&self, source: &[String], target: &[String]) -> Result<f64>;
}

/// Ratio of mean `ln(1 + rank)` over content words (target / source).
/// Values below 1 mean the target uses more frequent, simpler words.
#[derive(Debug, Clone)]
pub struct LogRankComplexity {
    pub frequencies: FrequencyTable,
    pub stopwords: HashSet<String>,
}

impl LogRankComplexity {
    pub fn shipped() -> Self {
        Self {
            frequencies: FrequencyTable::shipped(),
            stopwords: shipped_stopwords(),
        }
    }

    fn mean_log_rank(&self, tokens: &[String], side: &'static str) -> Result<f64> {
        let ranks: Vec<f64> = tokens
            .iter()
            .filter(|t| t.chars().any(char::is_alphanumeric) && !self.stopwords.contains(t.as_str()))
            .map(|t| (1.0 + self.frequencies.rank(t) as f64).ln())
            .collect();
        if ranks.is_empty() {
            return Err(Error::EmptyContent(side));
        }
        Ok(ranks.iter().sum::<f64>() / ranks.len() as f64)
    }
}

impl ComplexityScorer for LogRankComplexity {
    fn complexity_ratio(&self, source: &[String], target: &[String]) -> Result<f64> {
        let s = self.mean_log_rank(source, "source")?;
        let t = self.mean_log_rank(target, "target")?;
        Ok(t / s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicProfile {
    pub old_word_retention: f64,
    pub char_length_ratio: f64,
    pub word_edit_distance: usize,
    pub complexity_ratio: f64,
    pub dep_depth_ratio: Option<f64>,
}

pub fn evaluate_profile(pair: &EditPair, scorer: &dyn ComplexityScorer) -> Result<HeuristicProfile> {
    let source = tokenize(&pair.source);
    let target = tokenize(&pair.target);
    let source_chars = pair.source.chars().count();
    if source.is_empty() || source_chars == 0 {
        return Err(Error::EmptySource);
    }
    let dep_depth_ratio = match (
        pair.annotations.get(SOURCE_DEPTH_KEY),
        pair.annotations.get(TARGET_DEPTH_KEY),
    ) {
        (Some(&s), Some(&t)) if s > 0.0 => Some(t / s),
        _ => None,
    };
    Ok(HeuristicProfile {
        old_word_retention: old_word_retention(&source, &target)?,
        char_length_ratio: pair.target.chars().count() as f64 / source_chars as f64,
        word_edit_distance: word_edit_distance(&source, &target),
        complexity_ratio: scorer.complexity_ratio(&source, &target)?,
        dep_depth_ratio,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Bound {
    pub fn contains(&self, v: f64) -> bool {
        self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }

    fn check(&self, name: &str) -> Result<()> {
        if let (Some(lo), Some(hi)) = (self.min, self.max) {
            if lo > hi {
                return Err(Error::Config(format!("{name}: min {lo} > max {hi}")));
            }
        }
        Ok(())
    }
}

/// Per-heuristic bounds. Unset bounds, and heuristics missing from a
/// profile, are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub old_word_retention: Option<Bound>,
    pub char_length_ratio: Option<Bound>,
    pub word_edit_distance: Option<Bound>,
    pub complexity_ratio: Option<Bound>,
    pub dep_depth_ratio: Option<Bound>,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        let bounds = [
            ("old_word_retention", self.old_word_retention),
            ("char_length_ratio", self.char_length_ratio),
            ("word_edit_distance", self.word_edit_distance),
            ("complexity_ratio", self.complexity_ratio),
            ("dep_depth_ratio", self.dep_depth_ratio),
        ];
        bounds
            .iter()
            .filter_map(|(n, b)| b.map(|b| (n, b)))
            .try_for_each(|(n, b)| b.check(n))
    }
}

pub fn passes(profile: &HeuristicProfile, spec: &FilterSpec) -> bool {
    let within = |bound: &Option<Bound>, value: Option<f64>| match (bound, value) {
        (Some(b), Some(v)) => b.contains(v),
        _ => true,
    };
    within(&spec.old_word_retention, Some(profile.old_word_retention))
        && within(&spec.char_length_ratio, Some(profile.char_length_ratio))
        && within(&spec.word_edit_distance, Some(profile.word_edit_distance as f64))
        && within(&spec.complexity_ratio, Some(profile.complexity_ratio))
        && within(&spec.dep_depth_ratio, profile.dep_depth_ratio)
}

/// Named filter presets keyed by task name (`gec`, `gec+paraphrase`, ...).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterPresets {
    #[serde(default)]
    pub presets: BTreeMap<String, FilterSpec>,
}

impl FilterPresets {
    pub fn parse(text: &str) -> Result<Self> {
        let presets: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for spec in presets.presets.values() {
            spec.validate()?;
        }
        Ok(presets)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_PRESETS).expect("shipped presets parse")
    }

    pub fn get(&self, name: &str) -> Option<&FilterSpec> {
        self.presets.get(name)
    }
}
