//! End-to-end evaluation: run a system over a benchmark suite, score each
//! dataset with its metrics and emit reports.

mod chain;
mod report;
mod systems;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chain::{chain_decompose, run_chain, ChainRun, ChainStep, ChainSystem, StepSource};
pub use report::{overall_score, parse_csv, render, render_csv, render_text, ReportFormat};
pub use systems::{CopySystem, EndpointSystem, OutputsFileSystem, TextEditor};

use crate::corpus::{CorpusRegistry, CorpusSpec};
use crate::error::{Error, IoContext, Result};
use crate::gateway::{classifier_accuracy, semantic_similarity, ModelClient};
use crate::metrics::{self, Against, MetricInput};
use crate::model::{EditPair, InstanceRecord, Mode, OverallCell, RunMetadata, ScoreReport, Split, TaskSpec};
use crate::rng;
use crate::verbalizer::TemplateBank;

const DEFAULT_SUITE: &str = include_str!("../../data/default_suite.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Sari,
    Gleu,
    ExactMatch,
    SelfBleu,
    SelfBleuSource,
    CompressionRatio,
    FormalityAccuracy,
    PolitenessAccuracy,
    SemanticSimilarity,
}

impl MetricName {
    pub fn name(self) -> &'static str {
        match self {
            MetricName::Sari => "sari",
            MetricName::Gleu => "gleu",
            MetricName::ExactMatch => "exact_match",
            MetricName::SelfBleu => "self_bleu",
            MetricName::SelfBleuSource => "self_bleu_source",
            MetricName::CompressionRatio => "compression_ratio",
            MetricName::FormalityAccuracy => "formality_accuracy",
            MetricName::PolitenessAccuracy => "politeness_accuracy",
            MetricName::SemanticSimilarity => "semantic_similarity",
        }
    }

    /// Lower is better; enters the Overall column as `100 - value`.
    pub fn is_inverse(name: &str) -> bool {
        name.starts_with("self_bleu")
    }
}

impl FromStr for MetricName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub id: String,
    pub corpus: String,
    pub path: PathBuf,
    /// Overrides the corpus task, e.g. to evaluate composite instructions.
    #[serde(default)]
    pub task: Option<TaskSpec>,
    pub metrics: Vec<MetricName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSuite {
    pub id: String,
    #[serde(default)]
    pub corpora: Vec<CorpusSpec>,
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub overall: Vec<OverallCell>,
}

impl BenchmarkSuite {
    pub fn parse(text: &str) -> Result<Self> {
        let suite: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        suite.validate()?;
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn default_suite() -> Self {
        Self::parse(DEFAULT_SUITE).expect("default suite parses")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for d in &self.datasets {
            if d.metrics.is_empty() {
                return Err(Error::Config(format!("dataset `{}` has no metrics", d.id)));
            }
            if seen.insert(d.id.as_str(), d).is_some() {
                return Err(Error::Config(format!("dataset `{}` listed twice", d.id)));
            }
        }
        for cell in &self.overall {
            let d = seen
                .get(cell.dataset_id.as_str())
                .ok_or_else(|| Error::Config(format!("overall cell names unknown dataset `{}`", cell.dataset_id)))?;
            for m in &cell.metrics {
                if !d.metrics.iter().any(|x| x.name() == m) {
                    return Err(Error::Config(format!("overall cell {}/{m} is not scored", cell.dataset_id)));
                }
            }
        }
        Ok(())
    }

    /// Keeps only the named datasets, and overall cells over them.
    pub fn restrict(mut self, ids: &[String]) -> Result<Self> {
        for id in ids {
            if !self.datasets.iter().any(|d| &d.id == id) {
                return Err(Error::Config(format!("suite `{}` has no dataset `{id}`", self.id)));
            }
        }
        self.datasets.retain(|d| ids.contains(&d.id));
        self.overall.retain(|c| ids.contains(&c.dataset_id));
        Ok(self)
    }

    pub fn registry(&self) -> Result<CorpusRegistry> {
        let mut reg = CorpusRegistry::builtin();
        for spec in &self.corpora {
            reg.register(spec.clone())?;
        }
        Ok(reg)
    }
}

/// External scorer endpoints for model-based metrics.
#[derive(Default)]
pub struct Scorers {
    pub formality: Option<ModelClient>,
    pub politeness: Option<ModelClient>,
    pub similarity: Option<ModelClient>,
}

pub struct RunContext {
    pub data_root: PathBuf,
    pub seed: u64,
    pub bank: TemplateBank,
    pub scorers: Scorers,
    /// Free-form decoding description recorded in the report.
    pub decoding: String,
    pub shots: usize,
}

impl RunContext {
    pub fn new(data_root: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            data_root: data_root.into(),
            seed,
            bank: TemplateBank::shipped(),
            scorers: Scorers::default(),
            decoding: "greedy".into(),
            shots: 0,
        }
    }
}

/// Evaluation instances for one dataset.
#[derive(Debug, Clone)]
pub struct DatasetInstances {
    pub pairs: Vec<EditPair>,
    pub records: Vec<InstanceRecord>,
}

/// Loads a dataset and renders one instruction per pair, drawn from a
/// stream keyed by the dataset id.
pub fn load_dataset(
    spec: &DatasetSpec,
    registry: &CorpusRegistry,
    ctx: &RunContext,
) -> Result<DatasetInstances> {
    let path = ctx.data_root.join(&spec.path);
    let mut pairs = registry.ingest(&spec.corpus, &path, Some(Split::Test))?;
    if pairs.is_empty() {
        return Err(Error::Config(format!("dataset `{}` is empty", spec.id)));
    }
    if let Some(task) = &spec.task {
        for p in &mut pairs {
            p.task = task.clone();
        }
    }
    let mut rng = rng::stream(ctx.seed, &format!("eval/{}", spec.id));
    let mut records = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let instruction = match &pair.task {
            TaskSpec::Single(t) => ctx.bank.sample_instruction(*t, &mut rng)?.to_string(),
            TaskSpec::Composite(c) => ctx.bank.compose(c, &mut rng)?.body,
        };
        records.push(InstanceRecord {
            input: crate::model::render_input(&instruction, &pair.source),
            instruction,
            target: pair.target.clone(),
            task: pair.task.clone(),
            mode: Mode::Instruction,
            corpus_id: pair.corpus_id.clone(),
            split: Split::Test,
            references: pair.references.clone(),
        });
    }
    Ok(DatasetInstances { pairs, records })
}

pub struct RunOutput {
    pub report: ScoreReport,
    /// Hypotheses per dataset, in dataset order; absent when generation failed.
    pub hypotheses: BTreeMap<String, Vec<String>>,
}

fn need<'a>(client: &'a Option<ModelClient>, what: &str) -> Result<&'a ModelClient> {
    client
        .as_ref()
        .ok_or_else(|| Error::Config(format!("no {what} scorer endpoint configured")))
}

fn score_metric(metric: MetricName, pairs: &[EditPair], hyps: &[String], ctx: &RunContext) -> Result<f64> {
    let inputs: Vec<MetricInput> = pairs
        .iter()
        .zip(hyps)
        .map(|(p, h)| MetricInput::new(p.source.clone(), h.clone(), p.reference_list()))
        .collect();
    match metric {
        MetricName::Sari => metrics::corpus_sari(&inputs),
        MetricName::Gleu => metrics::gleu(&inputs),
        MetricName::ExactMatch => metrics::exact_match(&inputs),
        MetricName::SelfBleu => metrics::corpus_self_bleu(&inputs, Against::References),
        MetricName::SelfBleuSource => metrics::corpus_self_bleu(&inputs, Against::Source),
        MetricName::CompressionRatio => metrics::compression_ratio(&inputs),
        MetricName::FormalityAccuracy => {
            classifier_accuracy(hyps, need(&ctx.scorers.formality, "formality")?, "formal")
        }
        MetricName::PolitenessAccuracy => {
            classifier_accuracy(hyps, need(&ctx.scorers.politeness, "politeness")?, "polite")
        }
        MetricName::SemanticSimilarity => {
            let pairs: Vec<(String, String)> = pairs.iter().zip(hyps).map(|(p, h)| (p.source.clone(), h.clone())).collect();
            semantic_similarity(&pairs, need(&ctx.scorers.similarity, "similarity")?)
        }
    }
}

/// Runs `system` over every dataset, datasets in parallel. Failures are
/// recorded per row and do not stop the run.
pub fn run(suite: &BenchmarkSuite, system_id: &str, system: &dyn TextEditor, ctx: &RunContext) -> Result<RunOutput> {
    suite.validate()?;
    let registry = suite.registry()?;
    let metadata = RunMetadata {
        suite_id: suite.id.clone(),
        decoding: ctx.decoding.clone(),
        shots: ctx.shots,
        seed: ctx.seed,
        overall: suite.overall.clone(),
    };
    let mut report = ScoreReport::new(system_id, metadata);
    let mut hypotheses = BTreeMap::new();
    let outcomes: Vec<_> = suite
        .datasets
        .par_iter()
        .map(|spec| {
            let generated = load_dataset(spec, &registry, ctx).and_then(|data| {
                let hyps = system
                    .edit_dataset(&spec.id, &data.records)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.map_err(|e| Error::Instance {
                            index: i + 1,
                            source: Box::new(e),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if hyps.len() != data.pairs.len() {
                    return Err(Error::Config(format!(
                        "{} hypotheses for {} instances",
                        hyps.len(),
                        data.pairs.len()
                    )));
                }
                Ok((data, hyps))
            });
            match generated {
                Err(e) => {
                    log::warn!("dataset {}: {e}", spec.id);
                    let scores = spec.metrics.iter().map(|_| Err(e.to_string())).collect::<Vec<_>>();
                    (scores, None)
                }
                Ok((data, hyps)) => {
                    let scores = spec
                        .metrics
                        .iter()
                        .map(|m| score_metric(*m, &data.pairs, &hyps, ctx).map_err(|e| e.to_string()))
                        .collect::<Vec<_>>();
                    (scores, Some(hyps))
                }
            }
        })
        .collect();
    for (spec, (scores, hyps)) in suite.datasets.iter().zip(outcomes) {
        for (m, score) in spec.metrics.iter().zip(scores) {
            match score {
                Ok(v) => report.push_value(&spec.id, m.name(), v)?,
                Err(e) => report.push_failure(&spec.id, m.name(), e)?,
            }
        }
        if let Some(h) = hyps {
            hypotheses.insert(spec.id.clone(), h);
        }
    }
    Ok(RunOutput { report, hypotheses })
}

/// Writes `report.json`, `report.csv` and `hypotheses/<dataset_id>.txt`.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<()> {
    let hyp_dir = dir.join("hypotheses");
    fs::create_dir_all(&hyp_dir).io_context(|| format!("creating {}", hyp_dir.display()))?;
    for (id, hyps) in &out.hypotheses {
        let mut body = String::new();
        for h in hyps {
            body.push_str(&h.replace(['\n', '\r'], " "));
            body.push('\n');
        }
        let path = hyp_dir.join(format!("{id}.txt"));
        fs::write(&path, body).io_context(|| format!("writing {}", path.display()))?;
    }
    let json = serde_json::to_string_pretty(&out.report)?;
    fs::write(dir.join("report.json"), json + "\n").io_context(|| format!("writing report in {}", dir.display()))?;
    let csv = render_csv(std::slice::from_ref(&out.report))?;
    fs::write(dir.join("report.csv"), csv).io_context(|| format!("writing report in {}", dir.display()))?;
    Ok(())
}
