//! Domain types shared across the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::text::{normalize_text, NormalizationPolicy};

/// Edit intention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EditTask {
    Gec,
    Coherence,
    Clarity,
    Simplification,
    Paraphrase,
    Formalize,
    Neutralize,
    /// Out-of-domain, evaluation only.
    Compression,
    /// Out-of-domain, evaluation only.
    Politeness,
}

impl EditTask {
    pub const ALL: [EditTask; 9] = [
        EditTask::Gec,
        EditTask::Coherence,
        EditTask::Clarity,
        EditTask::Simplification,
        EditTask::Paraphrase,
        EditTask::Formalize,
        EditTask::Neutralize,
        EditTask::Compression,
        EditTask::Politeness,
    ];

    pub const IN_DOMAIN: [EditTask; 7] = [
        EditTask::Gec,
        EditTask::Coherence,
        EditTask::Clarity,
        EditTask::Simplification,
        EditTask::Paraphrase,
        EditTask::Formalize,
        EditTask::Neutralize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EditTask::Gec => "gec",
            EditTask::Coherence => "coherence",
            EditTask::Clarity => "clarity",
            EditTask::Simplification => "simplification",
            EditTask::Paraphrase => "paraphrase",
            EditTask::Formalize => "formalize",
            EditTask::Neutralize => "neutralize",
            EditTask::Compression => "compression",
            EditTask::Politeness => "politeness",
        }
    }

    /// Tag used by prefix-mode datasets.
    pub fn prefix_tag(self) -> &'static str {
        match self {
            EditTask::Gec => "gec",
            EditTask::Coherence => "coherence",
            EditTask::Clarity => "clarify",
            EditTask::Simplification => "simplify",
            EditTask::Paraphrase => "paraphrase",
            EditTask::Formalize => "formalize",
            EditTask::Neutralize => "neutralize",
            EditTask::Compression => "compress",
            EditTask::Politeness => "polite",
        }
    }

    pub fn is_in_domain(self) -> bool {
        !matches!(self, EditTask::Compression | EditTask::Politeness)
    }
}

impl fmt::Display for EditTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EditTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lowered = s.trim().to_ascii_lowercase();
        let task = match lowered.as_str() {
            "gec" | "fluency" | "grammar" => EditTask::Gec,
            "coherence" => EditTask::Coherence,
            "clarity" | "clarify" => EditTask::Clarity,
            "simplification" | "simplify" => EditTask::Simplification,
            "paraphrase" | "paraphrasing" => EditTask::Paraphrase,
            "formalize" | "formality" => EditTask::Formalize,
            "neutralize" | "neutralization" => EditTask::Neutralize,
            "compression" | "compress" => EditTask::Compression,
            "politeness" | "polite" => EditTask::Politeness,
            _ => return Err(Error::UnknownTask(s.to_owned())),
        };
        Ok(task)
    }
}

/// Two or three distinct tasks requested in one instruction, in stored order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeTask(Vec<EditTask>);

impl CompositeTask {
    pub fn new(tasks: Vec<EditTask>) -> Result<Self> {
        if !(2..=3).contains(&tasks.len()) {
            return Err(Error::InvalidArity(tasks.len()));
        }
        for (i, t) in tasks.iter().enumerate() {
            if tasks[..i].contains(t) {
                return Err(Error::validation(
                    "composite",
                    format!("task `{t}` appears twice"),
                ));
            }
        }
        Ok(Self(tasks))
    }

    pub fn tasks(&self) -> &[EditTask] {
        &self.0
    }
}

impl fmt::Display for CompositeTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.0.iter().map(|t| t.name()).collect();
        f.write_str(&names.join("+"))
    }
}

/// Either a single task or a composite. Serialized as `gec` or
/// `gec+paraphrase`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskSpec {
    Single(EditTask),
    Composite(CompositeTask),
}

impl TaskSpec {
    pub fn tasks(&self) -> &[EditTask] {
        match self {
            TaskSpec::Single(t) => std::slice::from_ref(t),
            TaskSpec::Composite(c) => c.tasks(),
        }
    }

    pub fn as_single(&self) -> Option<EditTask> {
        match self {
            TaskSpec::Single(t) => Some(*t),
            TaskSpec::Composite(_) => None,
        }
    }

    pub fn prefix_tag(&self) -> String {
        let tags: Vec<_> = self.tasks().iter().map(|t| t.prefix_tag()).collect();
        tags.join(",")
    }
}

impl From<EditTask> for TaskSpec {
    fn from(t: EditTask) -> Self {
        TaskSpec::Single(t)
    }
}

impl From<CompositeTask> for TaskSpec {
    fn from(c: CompositeTask) -> Self {
        TaskSpec::Composite(c)
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskSpec::Single(t) => t.fmt(f),
            TaskSpec::Composite(c) => c.fmt(f),
        }
    }
}

impl FromStr for TaskSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['+', '-']).collect();
        if parts.len() == 1 {
            return Ok(TaskSpec::Single(parts[0].parse()?));
        }
        let tasks = parts
            .into_iter()
            .map(str::parse)
            .collect::<Result<Vec<EditTask>>>()?;
        Ok(TaskSpec::Composite(CompositeTask::new(tasks)?))
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(EditTask);
string_serde!(TaskSpec);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    /// Recognizes the split names used by common corpus releases.
    pub fn from_label(label: &str) -> Option<Split> {
        match label.to_ascii_lowercase().as_str() {
            "train" | "training" => Some(Split::Train),
            "validation" | "valid" | "val" | "dev" | "tune" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parallel (source, target) pair with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditPair {
    pub source: String,
    pub target: String,
    pub task: TaskSpec,
    pub corpus_id: String,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, f64>,
}

impl EditPair {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        task: impl Into<TaskSpec>,
        corpus_id: impl Into<String>,
        split: Split,
    ) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            task: task.into(),
            corpus_id: corpus_id.into(),
            split,
            references: None,
            annotations: BTreeMap::new(),
        }
    }

    pub fn with_references(mut self, references: Vec<String>) -> Self {
        self.references = Some(references);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if normalize_text(&self.source, &NormalizationPolicy::default()).is_empty() {
            return Err(Error::validation("source", "empty after normalization"));
        }
        if let Some(refs) = &self.references {
            match refs.first() {
                None => return Err(Error::validation("references", "present but empty")),
                Some(first) if *first != self.target => {
                    return Err(Error::validation(
                        "target",
                        "must equal the first reference",
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// References for scoring: the explicit list, or the single target.
    pub fn reference_list(&self) -> Vec<String> {
        match &self.references {
            Some(refs) => refs.clone(),
            None => vec![self.target.clone()],
        }
    }

    pub fn normalized(mut self, policy: &NormalizationPolicy) -> Self {
        self.source = normalize_text(&self.source, policy);
        self.target = normalize_text(&self.target, policy);
        if let Some(refs) = &mut self.references {
            for r in refs.iter_mut() {
                *r = normalize_text(r, policy);
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Instruction,
    Prefix,
    Randomized,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Instruction => "instruction",
            Mode::Prefix => "prefix",
            Mode::Randomized => "randomized",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "instruction" => Ok(Mode::Instruction),
            "prefix" => Ok(Mode::Prefix),
            "randomized" | "random" => Ok(Mode::Randomized),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// RNG draws that produced an instance, for reproduction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTrace {
    pub stream: String,
    pub draws: Vec<usize>,
}

/// Separator between the rendered instruction and the source text.
pub const INSTRUCTION_SEPARATOR: &str = ": ";

pub fn render_input(instruction: &str, source: &str) -> String {
    format!("{instruction}{INSTRUCTION_SEPARATOR}{source}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstructionInstance {
    /// Instruction text without the trailing separator.
    pub instruction: String,
    pub source: String,
    pub input: String,
    pub target: String,
    pub task: TaskSpec,
    pub mode: Mode,
    pub corpus_id: String,
    pub split: Split,
    pub references: Option<Vec<String>>,
    pub seed_trace: SeedTrace,
}

impl InstructionInstance {
    pub fn new(
        pair: &EditPair,
        instruction: impl Into<String>,
        mode: Mode,
        seed_trace: SeedTrace,
    ) -> Self {
        let instruction = instruction.into();
        Self {
            input: render_input(&instruction, &pair.source),
            instruction,
            source: pair.source.clone(),
            target: pair.target.clone(),
            task: pair.task.clone(),
            mode,
            corpus_id: pair.corpus_id.clone(),
            split: pair.split,
            references: pair.references.clone(),
            seed_trace,
        }
    }

    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            instruction: self.instruction.clone(),
            input: self.input.clone(),
            target: self.target.clone(),
            task: self.task.clone(),
            mode: self.mode,
            corpus_id: self.corpus_id.clone(),
            split: self.split,
            references: self.references.clone(),
        }
    }
}

/// One line of an emitted JSON-lines dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instruction: String,
    pub input: String,
    pub target: String,
    pub task: TaskSpec,
    pub mode: Mode,
    pub corpus_id: String,
    pub split: Split,
    #[serde(default)]
    pub references: Option<Vec<String>>,
}

impl InstanceRecord {
    /// The source text, recovered by stripping the rendered instruction.
    pub fn source(&self) -> Option<&str> {
        self.input
            .strip_prefix(self.instruction.as_str())?
            .strip_prefix(INSTRUCTION_SEPARATOR)
    }
}

/// Run configuration recorded alongside scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub suite_id: String,
    pub decoding: String,
    pub shots: usize,
    pub seed: u64,
    #[serde(default)]
    pub overall: Vec<OverallCell>,
}

/// One dataset's contribution to the "Overall" column: the mean of `metrics`,
/// with lower-is-better metrics flipped to `100 - value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallCell {
    pub dataset_id: String,
    pub metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub dataset_id: String,
    pub metric: String,
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub system_id: String,
    pub rows: Vec<ScoreRow>,
    pub metadata: RunMetadata,
}

impl ScoreReport {
    pub fn new(system_id: impl Into<String>, metadata: RunMetadata) -> Self {
        Self {
            system_id: system_id.into(),
            rows: Vec::new(),
            metadata,
        }
    }

    fn check_unique(&self, dataset_id: &str, metric: &str) -> Result<()> {
        if self.get_row(dataset_id, metric).is_some() {
            return Err(Error::DuplicateRow {
                dataset: dataset_id.to_owned(),
                metric: metric.to_owned(),
            });
        }
        Ok(())
    }

    pub fn push_value(&mut self, dataset_id: &str, metric: &str, value: f64) -> Result<()> {
        self.check_unique(dataset_id, metric)?;
        self.rows.push(ScoreRow {
            dataset_id: dataset_id.to_owned(),
            metric: metric.to_owned(),
            value: Some(value),
            error: None,
        });
        Ok(())
    }

    pub fn push_failure(&mut self, dataset_id: &str, metric: &str, error: String) -> Result<()> {
        self.check_unique(dataset_id, metric)?;
        self.rows.push(ScoreRow {
            dataset_id: dataset_id.to_owned(),
            metric: metric.to_owned(),
            value: None,
            error: Some(error),
        });
        Ok(())
    }

    pub fn get_row(&self, dataset_id: &str, metric: &str) -> Option<&ScoreRow> {
        self.rows
            .iter()
            .find(|r| r.dataset_id == dataset_id && r.metric == metric)
    }

    pub fn get(&self, dataset_id: &str, metric: &str) -> Option<f64> {
        self.get_row(dataset_id, metric).and_then(|r| r.value)
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.value.is_none())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn composite_arity_and_duplicates() {
        assert!(matches!(
            CompositeTask::new(vec![EditTask::Gec]),
            Err(Error::InvalidArity(1))
        ));
        assert!(CompositeTask::new(vec![EditTask::Gec, EditTask::Gec]).is_err());
        assert!(CompositeTask::new(vec![
            EditTask::Gec,
            EditTask::Paraphrase,
            EditTask::Simplification,
            EditTask::Formalize
        ])
        .is_err());
        let c = CompositeTask::new(vec![EditTask::Gec, EditTask::Simplification]).unwrap();
        assert_eq!(c.to_string(), "gec+simplification");
    }

    #[test]
    fn task_spec_parsing() {
        assert_eq!("gec".parse::<TaskSpec>().unwrap(), TaskSpec::Single(EditTask::Gec));
        let spec: TaskSpec = "formalize-paraphrase-simplify".parse().unwrap();
        assert_eq!(
            spec.tasks(),
            [EditTask::Formalize, EditTask::Paraphrase, EditTask::Simplification]
        );
        assert!("bogus".parse::<TaskSpec>().is_err());
    }

    #[test]
    fn pair_validation_names_the_field() {
        let pair = EditPair::new("  ", "x", EditTask::Gec, "c", Split::Train);
        match pair.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "source"),
            other => panic!("unexpected {other:?}"),
        }
        let pair = EditPair::new("a", "b", EditTask::Gec, "c", Split::Test)
            .with_references(vec!["c".into(), "b".into()]);
        match pair.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "target"),
            other => panic!("unexpected {other:?}"),
        }
        let pair = EditPair::new("a", "b", EditTask::Gec, "c", Split::Test).with_references(vec![]);
        assert!(pair.validate().is_err());
    }

    #[test]
    fn record_source_recovery() {
        let pair = EditPair::new("he go home", "he goes home", EditTask::Gec, "c", Split::Train);
        let inst = InstructionInstance::new(&pair, "Fix grammar", Mode::Instruction, SeedTrace::default());
        assert_eq!(inst.input, "Fix grammar: he go home");
        assert_eq!(inst.to_record().source(), Some("he go home"));
    }

    #[test]
    fn duplicate_rows_rejected() {
        let mut r = ScoreReport::new("copy", RunMetadata::default());
        r.push_value("asset", "sari", 20.0).unwrap();
        assert!(r.push_value("asset", "sari", 21.0).is_err());
        assert!(r.push_failure("asset", "sari", "x".into()).is_err());
    }

    fn task_strategy() -> impl Strategy<Value = TaskSpec> {
        let single = proptest::sample::select(EditTask::ALL.to_vec()).prop_map(TaskSpec::Single);
        let composite = proptest::sample::subsequence(EditTask::IN_DOMAIN.to_vec(), 2..=3)
            .prop_shuffle()
            .prop_map(|v| TaskSpec::Composite(CompositeTask::new(v).unwrap()));
        prop_oneof![single, composite]
    }

    proptest! {
        #[test]
        fn record_round_trips_through_json(
            instruction in "[A-Za-z ]{1,20}",
            source in "[a-z .']{1,30}",
            target in "[a-z .']{0,30}",
            task in task_strategy(),
            mode in proptest::sample::select(vec![Mode::Instruction, Mode::Prefix, Mode::Randomized]),
            split in proptest::sample::select(Split::ALL.to_vec()),
            refs in proptest::option::of(proptest::collection::vec("[a-z ]{0,10}", 1..4)),
        ) {
            let record = InstanceRecord {
                input: render_input(&instruction, &source),
                instruction, target, task, mode,
                corpus_id: "corpus".into(), split, references: refs,
            };
            let line = serde_json::to_string(&record).unwrap();
            let back: InstanceRecord = serde_json::from_str(&line).unwrap();
            prop_assert_eq!(back, record);
        }

        #[test]
        fn pair_round_trips_through_json(source in "[a-z ]{1,20}", target in "[a-z ]{0,20}", task in task_strategy(), depth in 1.0f64..9.0) {
            let mut pair = EditPair::new(source, target, task, "c", Split::Validation);
            pair.annotations.insert("src_depth".into(), depth);
            let back: EditPair = serde_json::from_str(&serde_json::to_string(&pair).unwrap()).unwrap();
            prop_assert_eq!(back, pair);
        }
    }
}
