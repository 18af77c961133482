//! Dataset construction: ingest corpora, filter, sample, render instructions
//! and emit JSON-lines splits with a manifest.
//!
//! Pair selection and instruction rendering draw from separate seeded
//! streams, so switching the mode changes only the instruction and input of
//! each record, never which pairs are chosen.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusRegistry, CorpusSpec};
use crate::error::{Error, IoContext, Result};
use crate::heuristics::{
    evaluate_profile, passes, shipped_stopwords, ComplexityScorer, FilterPresets, FilterSpec, FrequencyTable,
    LogRankComplexity,
};
use crate::model::{
    EditPair, EditTask, InstanceRecord, InstructionInstance, Mode, SeedTrace, Split, TaskSpec,
    INSTRUCTION_SEPARATOR,
};
use crate::rng::{self, sha256_hex};
use crate::verbalizer::TemplateBank;

pub const DEFAULT_MAX_TOKENS: usize = 256;
pub const MANIFEST_FILE: &str = "manifest.json";
/// Preset name that turns filtering off for an entry.
pub const NO_FILTER: &str = "none";

/// Default training-split sizes per task and composite.
pub const DEFAULT_COUNTS: &[(&str, usize)] = &[
    ("gec", 20_000),
    ("coherence", 11_000),
    ("clarity", 13_000),
    ("paraphrase", 15_000),
    ("formalize", 12_000),
    ("neutralize", 11_000),
    ("gec+paraphrase", 1_000),
    ("gec+simplification", 1_000),
    ("gec+paraphrase+simplification", 1_000),
    ("formalize+paraphrase", 5_000),
    ("formalize+simplification", 2_000),
    ("formalize+paraphrase+simplification", 4_000),
    ("paraphrase+simplification", 5_000),
];

/// Order-independent name for a task: task names sorted and joined by `+`.
pub fn canonical_task_key(task: &TaskSpec) -> String {
    let mut names: Vec<&str> = task.tasks().iter().map(|t| t.name()).collect();
    names.sort_unstable();
    names.join("+")
}

pub fn default_count(task: &TaskSpec) -> Option<usize> {
    let key = canonical_task_key(task);
    DEFAULT_COUNTS.iter().find(|(k, _)| *k == key).map(|(_, n)| *n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceRef {
    pub corpus: String,
    pub path: PathBuf,
    /// Split for every row, overriding labels in the file or its path.
    #[serde(default)]
    pub split: Option<Split>,
    /// Keep only rows from these splits; all splits when empty.
    #[serde(default)]
    pub splits: Vec<Split>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildEntry {
    pub task: TaskSpec,
    /// Training records to emit; defaults to the task's entry in [`DEFAULT_COUNTS`].
    #[serde(default)]
    pub count: Option<usize>,
    /// Validation records to emit; all filtered validation pairs when unset.
    #[serde(default)]
    pub validation_count: Option<usize>,
    /// Filter preset name; defaults to the task's own preset when one exists.
    #[serde(default)]
    pub filter: Option<String>,
    pub sources: Vec<SourceRef>,
}

impl BuildEntry {
    pub fn train_count(&self) -> Result<usize> {
        let n = self
            .count
            .or_else(|| default_count(&self.task))
            .ok_or_else(|| Error::Config(format!("entry `{}` needs a count", self.task)))?;
        if n == 0 {
            return Err(Error::validation("count", format!("entry `{}` has count 0", self.task)));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub seed: u64,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    /// Two-column `token<TAB>count` file replacing the shipped table.
    #[serde(default)]
    pub frequency_table: Option<PathBuf>,
    #[serde(default)]
    pub filter_presets: Option<PathBuf>,
    /// Directory of `<task>.txt` verbalizer banks replacing the shipped ones.
    #[serde(default)]
    pub banks: Option<PathBuf>,
    #[serde(default)]
    pub corpora: Vec<CorpusSpec>,
    pub entries: Vec<BuildEntry>,
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS
}

impl BuildConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a TOML config; relative paths inside it resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.frequency_table, &mut self.filter_presets, &mut self.banks]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        for entry in &mut self.entries {
            for source in &mut entry.sources {
                fix(&mut source.path);
            }
        }
    }

    /// The mode to build in: the caller's choice must agree with the config's.
    pub fn resolve_mode(&self, requested: Option<Mode>) -> Result<Mode> {
        match (self.mode, requested) {
            (Some(c), Some(r)) if c != r => Err(Error::ConflictingMode {
                config: c.to_string(),
                requested: r.to_string(),
            }),
            (c, r) => Ok(r.or(c).unwrap_or(Mode::Instruction)),
        }
    }
}

/// Everything a build needs besides the config itself.
pub struct Builder {
    pub registry: CorpusRegistry,
    pub bank: TemplateBank,
    pub presets: FilterPresets,
    pub scorer: Box<dyn ComplexityScorer>,
}

impl Builder {
    pub fn shipped() -> Self {
        Self {
            registry: CorpusRegistry::builtin(),
            bank: TemplateBank::shipped(),
            presets: FilterPresets::shipped(),
            scorer: Box::new(LogRankComplexity::shipped()),
        }
    }

    /// Shipped resources overridden by whatever the config points at.
    pub fn for_config(config: &BuildConfig) -> Result<Self> {
        let mut b = Self::shipped();
        for spec in &config.corpora {
            b.registry.register(spec.clone())?;
        }
        if let Some(dir) = &config.banks {
            b.bank = TemplateBank::load_dir(dir)?;
        }
        if let Some(p) = &config.filter_presets {
            b.presets = FilterPresets::load(p)?;
        }
        if let Some(p) = &config.frequency_table {
            b.scorer = Box::new(LogRankComplexity {
                frequencies: FrequencyTable::load(p, 1)?,
                stopwords: shipped_stopwords(),
            });
        }
        Ok(b)
    }

    fn filter_for(&self, entry: &BuildEntry) -> Result<Option<&FilterSpec>> {
        match entry.filter.as_deref() {
            Some(NO_FILTER) => Ok(None),
            Some(name) => self
                .presets
                .get(name)
                .map(Some)
                .ok_or_else(|| Error::Config(format!("unknown filter preset `{name}`"))),
            None => Ok(self.presets.get(&canonical_task_key(&entry.task))),
        }
    }

    fn keep_for_training(&self, pair: &EditPair, filter: Option<&FilterSpec>, max_tokens: usize) -> bool {
        let long = |s: &str| s.split_whitespace().count() > max_tokens;
        if long(&pair.source) || long(&pair.target) {
            return false;
        }
        match filter {
            None => true,
            Some(spec) => evaluate_profile(pair, self.scorer.as_ref()).is_ok_and(|p| passes(&p, spec)),
        }
    }

    /// Selects pairs and renders instances for every split, in emission order.
    pub fn plan(&self, config: &BuildConfig, mode: Mode) -> Result<Vec<InstructionInstance>> {
        if config.entries.is_empty() {
            return Err(Error::Config("no entries to build".into()));
        }
        let mut pools: Vec<BTreeMap<Split, Vec<EditPair>>> = Vec::new();
        for entry in &config.entries {
            let mut by_split: BTreeMap<Split, Vec<EditPair>> = BTreeMap::new();
            for source in &entry.sources {
                for mut pair in self.registry.ingest(&source.corpus, &source.path, source.split)? {
                    if !source.splits.is_empty() && !source.splits.contains(&pair.split) {
                        continue;
                    }
                    pair.task = entry.task.clone();
                    by_split.entry(pair.split).or_default().push(pair);
                }
            }
            pools.push(by_split);
        }

        // A source text may live in one split only; later splits win.
        let mut claimed: HashSet<String> = HashSet::new();
        for split in [Split::Test, Split::Validation, Split::Train] {
            let mut seen_here = HashSet::new();
            for pool in &mut pools {
                if let Some(pairs) = pool.get_mut(&split) {
                    pairs.retain(|p| !claimed.contains(&p.source));
                    seen_here.extend(pairs.iter().map(|p| p.source.clone()));
                }
            }
            claimed.extend(seen_here);
        }

        let mut instances = Vec::new();
        for (entry, pool) in config.entries.iter().zip(pools) {
            let filter = self.filter_for(entry)?;
            let train_count = entry.train_count()?;
            for (split, pairs) in pool {
                let (pairs, wanted) = match split {
                    Split::Test => {
                        let n = pairs.len();
                        (pairs, n)
                    }
                    _ => {
                        let keep: Vec<bool> = pairs
                            .par_iter()
                            .map(|p| self.keep_for_training(p, filter, config.max_tokens))
                            .collect();
                        let kept: Vec<EditPair> = pairs
                            .into_iter()
                            .zip(keep)
                            .filter_map(|(p, k)| k.then_some(p))
                            .collect();
                        let wanted = match split {
                            Split::Train => train_count,
                            _ => entry.validation_count.unwrap_or(kept.len()),
                        };
                        (kept, wanted)
                    }
                };
                if wanted > pairs.len() {
                    return Err(Error::InsufficientPool {
                        task: entry.task.to_string(),
                        split: split.to_string(),
                        requested: wanted,
                        available: pairs.len(),
                    });
                }
                let task_label = canonical_task_key(&entry.task);
                let mut pick_rng = rng::stream(config.seed, &format!("pairs/{task_label}/{split}"));
                let mut chosen = index::sample(&mut pick_rng, pairs.len(), wanted).into_vec();
                chosen.sort_unstable();

                let label = format!("instructions/{task_label}/{split}");
                let mut inst_rng = rng::stream(config.seed, &label);
                for i in chosen {
                    instances.push(self.render(&pairs[i], mode, &label, &mut inst_rng)?);
                }
            }
        }
        Ok(instances)
    }

    fn render<R: Rng>(&self, pair: &EditPair, mode: Mode, stream: &str, rng: &mut R) -> Result<InstructionInstance> {
        let trace = |draws| SeedTrace {
            stream: stream.to_string(),
            draws,
        };
        let (instruction, draws) = match (mode, &pair.task) {
            (Mode::Instruction, TaskSpec::Single(task)) => {
                let idx = self.bank.sample_index(*task, rng)?;
                (self.bank.paraphrase_variants(*task)?[idx].clone(), vec![idx])
            }
            (Mode::Instruction, TaskSpec::Composite(composite)) => {
                let c = self.bank.compose(composite, rng)?;
                let mut draws = c.picks.clone();
                draws.extend(&c.order);
                (c.body, draws)
            }
            (Mode::Prefix, task) => (task.prefix_tag(), Vec::new()),
            (Mode::Randomized, task) => {
                let own = task.tasks();
                let others: Vec<EditTask> = EditTask::IN_DOMAIN
                    .iter()
                    .copied()
                    .filter(|t| !own.contains(t))
                    .collect();
                let which = rng.gen_range(0..others.len());
                let idx = self.bank.sample_index(others[which], rng)?;
                (self.bank.paraphrase_variants(others[which])?[idx].clone(), vec![which, idx])
            }
        };
        Ok(InstructionInstance::new(pair, instruction, mode, trace(draws)))
    }

    /// Plans and writes `train.jsonl`, `validation.jsonl`, `test.jsonl` and
    /// the manifest into `out`.
    pub fn build(&self, config: &BuildConfig, requested: Option<Mode>, out: &Path) -> Result<Manifest> {
        let mode = config.resolve_mode(requested)?;
        let instances = self.plan(config, mode)?;
        write_dataset(&instances, config.seed, mode, out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub file: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub mode: Mode,
    /// split -> task -> record count
    pub counts: BTreeMap<Split, BTreeMap<String, usize>>,
    pub files: BTreeMap<Split, SplitFile>,
}

impl Manifest {
    pub fn total(&self) -> usize {
        self.files.values().map(|f| f.records).sum()
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).io_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn record_key(r: &InstanceRecord) -> String {
    let source = r.source().unwrap_or(&r.input);
    sha256_hex(format!("{}\u{0}{}\u{0}{}\u{0}{}", r.task, r.corpus_id, source, r.target).as_bytes())
}

pub fn write_dataset(instances: &[InstructionInstance], seed: u64, mode: Mode, out: &Path) -> Result<Manifest> {
    fs::create_dir_all(out).io_context(|| format!("creating {}", out.display()))?;
    let mut by_split: BTreeMap<Split, Vec<(String, InstanceRecord)>> = Split::ALL.iter().map(|s| (*s, Vec::new())).collect();
    for inst in instances {
        let record = inst.to_record();
        by_split.entry(record.split).or_default().push((record_key(&record), record));
    }
    let mut manifest = Manifest {
        seed,
        mode,
        counts: BTreeMap::new(),
        files: BTreeMap::new(),
    };
    for (split, mut records) in by_split {
        records.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.input.cmp(&b.1.input)));
        let mut body = String::new();
        let counts = manifest.counts.entry(split).or_default();
        for (_, r) in &records {
            body.push_str(&serde_json::to_string(r)?);
            body.push('\n');
            *counts.entry(r.task.to_string()).or_default() += 1;
        }
        let file = format!("{split}.jsonl");
        let path = out.join(&file);
        fs::write(&path, &body).io_context(|| format!("writing {}", path.display()))?;
        manifest.files.insert(
            split,
            SplitFile {
                file,
                records: records.len(),
                sha256: sha256_hex(body.as_bytes()),
            },
        );
    }
    let path = out.join(MANIFEST_FILE);
    let mut f = fs::File::create(&path).io_context(|| format!("writing {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n").io_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub records: usize,
}

fn check_record(r: &InstanceRecord, mode: Mode, bank: &TemplateBank) -> std::result::Result<(), String> {
    let prefix = format!("{}{INSTRUCTION_SEPARATOR}", r.instruction);
    if !r.input.starts_with(&prefix) {
        return Err("input does not start with its instruction".into());
    }
    if r.mode != mode {
        return Err(format!("mode `{}` in a `{mode}` build", r.mode));
    }
    let own = r.task.tasks();
    let owner = |instruction: &str| EditTask::ALL.iter().copied().find(|t| bank.contains(*t, instruction));
    match (mode, &r.task) {
        (Mode::Instruction, TaskSpec::Single(t)) => {
            if !bank.contains(*t, &r.instruction) {
                return Err(format!("instruction `{}` is not in the {t} bank", r.instruction));
            }
        }
        (Mode::Instruction, TaskSpec::Composite(_)) => {
            let ok = bank.is_composition_of(own, &r.instruction);
            if !ok {
                return Err(format!("instruction `{}` is not a composition for {}", r.instruction, r.task));
            }
        }
        (Mode::Prefix, task) => {
            if r.instruction != task.prefix_tag() {
                return Err(format!("prefix `{}` should be `{}`", r.instruction, task.prefix_tag()));
            }
        }
        (Mode::Randomized, _) => match owner(&r.instruction) {
            None => return Err(format!("instruction `{}` is in no bank", r.instruction)),
            Some(t) if own.contains(&t) => {
                return Err(format!("instruction `{}` belongs to the record's own task {t}", r.instruction))
            }
            Some(_) => {}
        },
    }
    Ok(())
}

/// Re-reads an emitted dataset and checks every record against the bank
/// and the manifest. Failures name `split:line`.
pub fn audit(dir: &Path, bank: &TemplateBank) -> Result<AuditReport> {
    let manifest = Manifest::load(dir)?;
    let mut failures = Vec::new();
    let mut total = 0;
    for (split, entry) in &manifest.files {
        let path = dir.join(&entry.file);
        let body = fs::read_to_string(&path).io_context(|| format!("reading {}", path.display()))?;
        if sha256_hex(body.as_bytes()) != entry.sha256 {
            failures.push(format!("{split}: content hash differs from manifest"));
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut lines = 0;
        for (i, line) in body.lines().enumerate() {
            lines += 1;
            let at = format!("{split}:{}", i + 1);
            let record: InstanceRecord = match serde_json::from_str(line) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("{at}: {e}"));
                    continue;
                }
            };
            if record.split != *split {
                failures.push(format!("{at}: split `{}` in the {split} file", record.split));
            }
            if let Err(reason) = check_record(&record, manifest.mode, bank) {
                failures.push(format!("{at}: {reason}"));
            }
            *counts.entry(record.task.to_string()).or_default() += 1;
        }
        if lines != entry.records {
            failures.push(format!("{split}: {lines} records, manifest says {}", entry.records));
        }
        let expected = manifest.counts.get(split).cloned().unwrap_or_default();
        if counts != expected {
            failures.push(format!("{split}: per-task counts differ from manifest"));
        }
        total += lines;
    }
    if failures.is_empty() {
        Ok(AuditReport { records: total })
    } else {
        Err(Error::AuditFailure(failures))
    }
}
