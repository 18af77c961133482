use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{aggregate, AggregateResult, ComparisonItem, CreateStudy, Judgment, Study};
use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    StudyCreated { study: Study },
    Judgment { study_id: String, judgment: Judgment },
}

struct StudyState {
    study: Study,
    judgments: Vec<Judgment>,
    judged: HashSet<(String, String)>,
    per_item: HashMap<String, usize>,
}

impl StudyState {
    fn new(study: Study) -> Self {
        Self {
            study,
            judgments: Vec::new(),
            judged: HashSet::new(),
            per_item: HashMap::new(),
        }
    }

    fn check(&self, j: &Judgment) -> Result<()> {
        if !self.study.annotators.contains(&j.annotator) {
            return Err(Error::UnknownAnnotator(j.annotator.clone()));
        }
        if self.study.item(&j.item_id).is_none() {
            return Err(Error::UnknownItem(j.item_id.clone()));
        }
        if self.judged.contains(&(j.item_id.clone(), j.annotator.clone())) {
            return Err(Error::DuplicateJudgment {
                item: j.item_id.clone(),
                annotator: j.annotator.clone(),
            });
        }
        if self.count(&j.item_id) >= self.study.annotations_per_item {
            return Err(Error::ItemFull(j.item_id.clone()));
        }
        Ok(())
    }

    fn count(&self, item_id: &str) -> usize {
        self.per_item.get(item_id).copied().unwrap_or(0)
    }

    fn record(&mut self, j: Judgment) {
        self.judged.insert((j.item_id.clone(), j.annotator.clone()));
        *self.per_item.entry(j.item_id.clone()).or_default() += 1;
        self.judgments.push(j);
    }
}

#[derive(Default)]
struct Inner {
    studies: BTreeMap<String, StudyState>,
    log: Option<File>,
}

impl Inner {
    fn apply(&mut self, event: Event) -> Result<()> {
        match event {
            Event::StudyCreated { study } => {
                self.studies.insert(study.study_id.clone(), StudyState::new(study));
            }
            Event::Judgment { study_id, judgment } => {
                let state = self
                    .studies
                    .get_mut(&study_id)
                    .ok_or_else(|| Error::UnknownStudy(study_id.clone()))?;
                state.check(&judgment)?;
                state.record(judgment);
            }
        }
        Ok(())
    }

    /// Appends and fsyncs before the in-memory state changes.
    fn commit(&mut self, event: Event) -> Result<()> {
        if let Some(file) = &mut self.log {
            let mut line = serde_json::to_string(&event)?;
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.sync_data())
                .io_context(|| "appending to the study log".to_string())?;
        }
        self.apply(event)
    }

    fn state(&self, study_id: &str) -> Result<&StudyState> {
        self.studies
            .get(study_id)
            .ok_or_else(|| Error::UnknownStudy(study_id.to_string()))
    }
}

fn replay_error(path: &Path, line: usize, e: Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        reason: e.to_string(),
    }
}

/// Studies and judgments, with all writes serialized through one lock.
pub struct StudyStore {
    inner: RwLock<Inner>,
    path: Option<PathBuf>,
}

/// Returned when a study is created. Tokens are handed out to annotators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedStudy {
    pub study_id: String,
    pub items: usize,
    pub annotator_tokens: Vec<String>,
}

impl StudyStore {
    pub fn in_memory() -> Self {
        Self {
            inner: RwLock::new(Inner::default()),
            path: None,
        }
    }

    /// Opens or creates the log at `path` and replays it. A torn final line
    /// from an interrupted write is dropped.
    pub fn open(path: &Path) -> Result<Self> {
        let mut inner = Inner::default();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e).io_context(|| format!("reading {}", path.display())),
        };
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let mut keep = text.len();
        for (i, raw) in lines.iter().enumerate() {
            let torn_tail = i + 1 == lines.len() && !raw.ends_with('\n');
            let event = match serde_json::from_str::<Event>(raw.trim_end()) {
                Ok(event) => event,
                Err(_) if torn_tail => {
                    log::warn!("dropping a torn final line in {}", path.display());
                    keep -= raw.len();
                    break;
                }
                Err(e) => return Err(replay_error(path, i + 1, e.into())),
            };
            inner.apply(event).map_err(|e| replay_error(path, i + 1, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .io_context(|| format!("opening {}", path.display()))?;
        file.set_len(keep as u64)
            .io_context(|| format!("truncating {}", path.display()))?;
        if keep > 0 && !text[..keep].ends_with('\n') {
            file.write_all(b"\n").io_context(|| format!("writing {}", path.display()))?;
        }
        inner.log = Some(file);
        Ok(Self {
            inner: RwLock::new(inner),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn create(&self, req: CreateStudy) -> Result<CreatedStudy> {
        let tokens: Vec<String> = (0..req.annotators).map(|_| uuid::Uuid::new_v4().simple().to_string()).collect();
        let study = Study::new(uuid::Uuid::new_v4().to_string(), tokens.clone(), req)?;
        let created = CreatedStudy {
            study_id: study.study_id.clone(),
            items: study.items.len(),
            annotator_tokens: tokens,
        };
        self.write().commit(Event::StudyCreated { study })?;
        Ok(created)
    }

    pub fn study_ids(&self) -> Vec<String> {
        self.read().studies.keys().cloned().collect()
    }

    /// An item this annotator has not judged and which still needs
    /// judgments, preferring items with the fewest so far. `None` when done.
    /// Concurrent callers may be served the same item; the cap is enforced
    /// on submission.
    pub fn next_item(&self, study_id: &str, annotator: &str) -> Result<Option<ComparisonItem>> {
        let inner = self.read();
        let state = inner.state(study_id)?;
        if !state.study.annotators.iter().any(|a| a == annotator) {
            return Err(Error::UnknownAnnotator(annotator.to_string()));
        }
        Ok(state
            .study
            .items
            .iter()
            .filter(|i| state.count(&i.item_id) < state.study.annotations_per_item)
            .filter(|i| !state.judged.contains(&(i.item_id.clone(), annotator.to_string())))
            .min_by_key(|i| state.count(&i.item_id))
            .map(ComparisonItem::from))
    }

    pub fn submit(&self, study_id: &str, mut judgment: Judgment) -> Result<()> {
        if judgment.timestamp_ms == 0 {
            judgment.timestamp_ms = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0);
        }
        let mut inner = self.write();
        inner.state(study_id)?.check(&judgment)?;
        inner.commit(Event::Judgment {
            study_id: study_id.to_string(),
            judgment,
        })
    }

    pub fn judgments(&self, study_id: &str) -> Result<Vec<Judgment>> {
        Ok(self.read().state(study_id)?.judgments.clone())
    }

    pub fn results(&self, study_id: &str) -> Result<AggregateResult> {
        let inner = self.read();
        let state = inner.state(study_id)?;
        aggregate(&state.study, &state.judgments)
    }
}
