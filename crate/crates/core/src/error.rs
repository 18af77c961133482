use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("no verbalizers available for task `{0}`")]
    EmptyBank(String),

    #[error("composite instructions need 2 or 3 distinct tasks, got {0}")]
    InvalidArity(usize),

    #[error("source has no tokens")]
    EmptySource,

    #[error("no content words left after stopword removal in {0}")]
    EmptyContent(&'static str),

    #[error("unknown corpus `{0}`")]
    UnknownCorpus(String),

    #[error("{path}:{line}: {reason}")]
    Format {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("task `{task}` ({split}) needs {requested} pairs but only {available} passed the filters")]
    InsufficientPool {
        task: String,
        split: String,
        requested: usize,
        available: usize,
    },

    #[error("build mode conflict: config says `{config}`, caller asked for `{requested}`")]
    ConflictingMode { config: String, requested: String },

    #[error("audit failed for {} record(s): {}", .0.len(), .0.join("; "))]
    AuditFailure(Vec<String>),

    #[error("metric `{metric}`: {reason}")]
    Metric { metric: &'static str, reason: String },

    #[error("task `{task}` has {available} exemplars, {requested} requested")]
    InsufficientExemplars {
        task: String,
        requested: usize,
        available: usize,
    },

    #[error("network error after {attempts} attempt(s): {reason}")]
    Network { attempts: u32, reason: String },

    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },

    #[error("authentication rejected by endpoint (status {status})")]
    Authentication { status: u16 },

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("expected a composite instruction, got task `{0}`")]
    NotComposite(String),

    #[error("chain step {step} failed: {source}")]
    ChainStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("instance {index}: {source}")]
    Instance {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("reports do not share a suite: {0}")]
    SuiteMismatch(String),

    #[error("duplicate score row {dataset}/{metric}")]
    DuplicateRow { dataset: String, metric: String },

    #[error("unknown study `{0}`")]
    UnknownStudy(String),

    #[error("annotator `{0}` is not registered for this study")]
    UnknownAnnotator(String),

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("the two systems cover different items: {0}")]
    CoverageMismatch(String),

    #[error("annotator `{annotator}` already judged item `{item}`")]
    DuplicateJudgment { item: String, annotator: String },

    #[error("item `{0}` already holds all of its judgments")]
    ItemFull(String),

    #[error("study incomplete, {} item(s) still need judgments: {}", .0.len(), .0.join(", "))]
    IncompleteStudy(Vec<String>),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn metric(metric: &'static str, reason: impl Into<String>) -> Self {
        Error::Metric {
            metric,
            reason: reason.into(),
        }
    }
}

pub(crate) trait IoContext<T> {
    fn io_context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn io_context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| Error::Io {
            context: context(),
            source,
        })
    }
}
