//! Blinded pairwise preference studies: two systems' outputs over a shared
//! input set, several judgments per item, majority-vote aggregation.
//!
//! State lives in an append-only JSON-lines event log. Every write is
//! flushed and fsynced before it is acknowledged, and the log is replayed on
//! startup.

mod server;
mod store;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use server::{router, serve, serve_blocking};
pub use store::{CreatedStudy, StudyStore};

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_ANNOTATIONS_PER_ITEM: usize = 3;
pub const DEFAULT_ANNOTATORS: usize = 3;

/// What an annotator picks for one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    #[serde(rename = "tie")]
    Tie,
    #[serde(rename = "neither")]
    Neither,
}

/// A choice with A/B mapped back to the two systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    System1,
    System2,
    Tie,
    Neither,
}

/// Verdict for items where no choice holds a strict majority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoMajority {
    #[default]
    Tie,
    Neither,
}

impl NoMajority {
    fn verdict(self) -> Verdict {
        match self {
            NoMajority::Tie => Verdict::Tie,
            NoMajority::Neither => Verdict::Neither,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemOutputs {
    pub name: String,
    /// Output text per item id.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateStudy {
    /// Instruction plus source text per item id.
    pub inputs: BTreeMap<String, String>,
    pub system_1: SystemOutputs,
    pub system_2: SystemOutputs,
    #[serde(default = "default_per_item")]
    pub annotations_per_item: usize,
    /// Number of annotator tokens to issue.
    #[serde(default = "default_annotators")]
    pub annotators: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub no_majority: NoMajority,
}

fn default_per_item() -> usize {
    DEFAULT_ANNOTATIONS_PER_ITEM
}

fn default_annotators() -> usize {
    DEFAULT_ANNOTATORS
}

/// Server-side item. `a_is_system_1` never leaves the service before
/// aggregation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyItem {
    pub item_id: String,
    pub input: String,
    pub output_a: String,
    pub output_b: String,
    pub a_is_system_1: bool,
}

/// What an annotator sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonItem {
    pub item_id: String,
    pub input: String,
    pub output_a: String,
    pub output_b: String,
}

impl From<&StudyItem> for ComparisonItem {
    fn from(i: &StudyItem) -> Self {
        Self {
            item_id: i.item_id.clone(),
            input: i.input.clone(),
            output_a: i.output_a.clone(),
            output_b: i.output_b.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Study {
    pub study_id: String,
    pub system_1: String,
    pub system_2: String,
    pub annotations_per_item: usize,
    pub annotators: Vec<String>,
    pub no_majority: NoMajority,
    pub items: Vec<StudyItem>,
}

impl Study {
    /// Checks coverage and draws one fair coin per item, in item-id order,
    /// from a stream that depends only on `seed`.
    pub fn new(study_id: String, annotators: Vec<String>, req: CreateStudy) -> Result<Self> {
        if req.annotations_per_item == 0 {
            return Err(Error::validation("annotations_per_item", "must be at least 1"));
        }
        if annotators.len() < req.annotations_per_item {
            return Err(Error::validation(
                "annotators",
                "fewer annotators than annotations per item",
            ));
        }
        if req.inputs.is_empty() {
            return Err(Error::validation("inputs", "no items"));
        }
        for sys in [&req.system_1, &req.system_2] {
            if !sys.outputs.keys().eq(req.inputs.keys()) {
                let missing: Vec<&str> = req
                    .inputs
                    .keys()
                    .filter(|k| !sys.outputs.contains_key(*k))
                    .chain(sys.outputs.keys().filter(|k| !req.inputs.contains_key(*k)))
                    .map(String::as_str)
                    .collect();
                return Err(Error::CoverageMismatch(format!(
                    "`{}` differs on items: {}",
                    sys.name,
                    missing.join(", ")
                )));
            }
        }
        if req.system_1.name == req.system_2.name {
            return Err(Error::validation("system_2", "both systems have the same name"));
        }
        let mut rng = rng::stream(req.seed, "annotation/assign");
        let items = req
            .inputs
            .iter()
            .map(|(id, input)| {
                let one = req.system_1.outputs[id].clone();
                let two = req.system_2.outputs[id].clone();
                let a_is_system_1 = rng.gen_bool(0.5);
                let (output_a, output_b) = if a_is_system_1 { (one, two) } else { (two, one) };
                StudyItem {
                    item_id: id.clone(),
                    input: input.clone(),
                    output_a,
                    output_b,
                    a_is_system_1,
                }
            })
            .collect();
        Ok(Self {
            study_id,
            system_1: req.system_1.name,
            system_2: req.system_2.name,
            annotations_per_item: req.annotations_per_item,
            annotators,
            no_majority: req.no_majority,
            items,
        })
    }

    pub fn item(&self, item_id: &str) -> Option<&StudyItem> {
        self.items.iter().find(|i| i.item_id == item_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub item_id: String,
    pub annotator: String,
    pub choice: Choice,
    /// Milliseconds since the Unix epoch.
    #[serde(default)]
    pub timestamp_ms: u64,
}

pub fn unblind(item: &StudyItem, choice: Choice) -> Verdict {
    match (choice, item.a_is_system_1) {
        (Choice::A, true) | (Choice::B, false) => Verdict::System1,
        (Choice::A, false) | (Choice::B, true) => Verdict::System2,
        (Choice::Tie, _) => Verdict::Tie,
        (Choice::Neither, _) => Verdict::Neither,
    }
}

/// The verdict held by more than half the votes, or the fallback.
pub fn majority(votes: &[Verdict], fallback: NoMajority) -> Verdict {
    let mut counts: BTreeMap<Verdict, usize> = BTreeMap::new();
    for v in votes {
        *counts.entry(*v).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|(_, c)| 2 * c > votes.len())
        .map(|(v, _)| v)
        .unwrap_or_else(|| fallback.verdict())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub system_1: usize,
    pub system_2: usize,
    pub tie: usize,
    pub neither: usize,
}

impl VerdictCounts {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::System1 => self.system_1 += 1,
            Verdict::System2 => self.system_2 += 1,
            Verdict::Tie => self.tie += 1,
            Verdict::Neither => self.neither += 1,
        }
    }

    fn as_array(&self) -> [usize; 4] {
        [self.system_1, self.system_2, self.tie, self.neither]
    }

    pub fn total(&self) -> usize {
        self.as_array().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Percentages {
    pub system_1: f64,
    pub system_2: f64,
    pub tie: f64,
    pub neither: f64,
}

impl Percentages {
    pub fn sum(&self) -> f64 {
        self.system_1 + self.system_2 + self.tie + self.neither
    }
}

/// Percentages at two decimals that always sum to exactly 100.00: floor the
/// quotas in hundredths of a percent, then hand out the leftover units by
/// largest remainder (earlier categories win ties).
pub fn percentages(counts: &VerdictCounts) -> Percentages {
    let n = counts.total();
    if n == 0 {
        return Percentages::default();
    }
    let c = counts.as_array();
    let mut units = [0usize; 4];
    let mut rems = [0usize; 4];
    for k in 0..4 {
        units[k] = c[k] * 10_000 / n;
        rems[k] = c[k] * 10_000 % n;
    }
    let mut left = 10_000 - units.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&x, &y| rems[y].cmp(&rems[x]).then(x.cmp(&y)));
    for k in order {
        if left == 0 {
            break;
        }
        if rems[k] > 0 {
            units[k] += 1;
            left -= 1;
        }
    }
    let p = |u: usize| u as f64 / 100.0;
    Percentages {
        system_1: p(units[0]),
        system_2: p(units[1]),
        tie: p(units[2]),
        neither: p(units[3]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemVerdict {
    pub item_id: String,
    pub votes: Vec<Verdict>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub study_id: String,
    pub system_1: String,
    pub system_2: String,
    pub items: Vec<ItemVerdict>,
    pub counts: VerdictCounts,
    pub percentages: Percentages,
}

/// Majority verdict per item and corpus percentages. Every item must hold
/// its full quota of judgments.
pub fn aggregate(study: &Study, judgments: &[Judgment]) -> Result<AggregateResult> {
    let mut votes: BTreeMap<&str, Vec<Verdict>> = study.items.iter().map(|i| (i.item_id.as_str(), Vec::new())).collect();
    for j in judgments {
        let item = study
            .item(&j.item_id)
            .ok_or_else(|| Error::UnknownItem(j.item_id.clone()))?;
        votes
            .get_mut(item.item_id.as_str())
            .expect("item present")
            .push(unblind(item, j.choice));
    }
    let incomplete: Vec<String> = study
        .items
        .iter()
        .filter(|i| votes[i.item_id.as_str()].len() < study.annotations_per_item)
        .map(|i| i.item_id.clone())
        .collect();
    if !incomplete.is_empty() {
        return Err(Error::IncompleteStudy(incomplete));
    }
    let mut counts = VerdictCounts::default();
    let items = study
        .items
        .iter()
        .map(|i| {
            let v = votes.remove(i.item_id.as_str()).unwrap_or_default();
            let verdict = majority(&v, study.no_majority);
            counts.add(verdict);
            ItemVerdict {
                item_id: i.item_id.clone(),
                votes: v,
                verdict,
            }
        })
        .collect();
    Ok(AggregateResult {
        study_id: study.study_id.clone(),
        system_1: study.system_1.clone(),
        system_2: study.system_2.clone(),
        items,
        percentages: percentages(&counts),
        counts,
    })
}
