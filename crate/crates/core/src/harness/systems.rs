use std::fs;
use std::path::PathBuf;

use crate::error::{Error, IoContext, Result};
use crate::gateway::{build_prompt, fewshot_rng, EndpointStyle, FewShotSpec, GenerationRequest, ModelClient, RunLog};
use crate::model::InstanceRecord;

/// A system under evaluation.
pub trait TextEditor: Sync {
    /// One output per record, in record order. The outer error fails the
    /// whole dataset; inner errors fail single instances.
    fn edit_dataset(&self, dataset_id: &str, records: &[InstanceRecord]) -> Result<Vec<Result<String>>>;
}

fn source_of(record: &InstanceRecord) -> Result<&str> {
    record
        .source()
        .ok_or_else(|| Error::validation("input", "does not start with its instruction"))
}

/// Returns every source unchanged.
#[derive(Debug, Default, Clone, Copy)]
pub struct CopySystem;

impl TextEditor for CopySystem {
    fn edit_dataset(&self, _: &str, records: &[InstanceRecord]) -> Result<Vec<Result<String>>> {
        Ok(records.iter().map(|r| source_of(r).map(str::to_owned)).collect())
    }
}

/// Precomputed outputs, one file per dataset: `<dir>/<dataset_id>.txt`
/// with one line per instance.
#[derive(Debug, Clone)]
pub struct OutputsFileSystem {
    pub dir: PathBuf,
}

impl OutputsFileSystem {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl TextEditor for OutputsFileSystem {
    fn edit_dataset(&self, dataset_id: &str, records: &[InstanceRecord]) -> Result<Vec<Result<String>>> {
        let path = self.dir.join(format!("{dataset_id}.txt"));
        let text = fs::read_to_string(&path).io_context(|| format!("reading {}", path.display()))?;
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() != records.len() {
            return Err(Error::Format {
                path: path.clone(),
                line: lines.len(),
                reason: format!("{} lines for {} instances", lines.len(), records.len()),
            });
        }
        Ok(lines.into_iter().map(|l| Ok(l.to_string())).collect())
    }
}

/// A model behind an HTTP endpoint, with optional few-shot prompting.
pub struct EndpointSystem {
    pub client: ModelClient,
    pub log: RunLog,
    pub fewshot: Option<(FewShotSpec, Vec<InstanceRecord>)>,
}

impl EndpointSystem {
    pub fn new(client: ModelClient, log: RunLog) -> Self {
        Self {
            client,
            log,
            fewshot: None,
        }
    }

    pub fn with_fewshot(mut self, spec: FewShotSpec, pool: Vec<InstanceRecord>) -> Self {
        self.fewshot = Some((spec, pool));
        self
    }

    pub fn request_for(&self, record: &InstanceRecord) -> Result<GenerationRequest> {
        if self.client.config.style == EndpointStyle::Edit {
            return Ok(GenerationRequest {
                prompt: source_of(record)?.to_owned(),
                instruction: Some(record.instruction.clone()),
            });
        }
        let prompt = match &self.fewshot {
            Some((spec, pool)) => build_prompt(record, Some((spec, pool)), &mut fewshot_rng(spec, record))?,
            None => record.input.clone(),
        };
        Ok(GenerationRequest {
            prompt,
            instruction: None,
        })
    }
}

impl TextEditor for EndpointSystem {
    fn edit_dataset(&self, _: &str, records: &[InstanceRecord]) -> Result<Vec<Result<String>>> {
        let requests = records.iter().map(|r| self.request_for(r)).collect::<Result<Vec<_>>>()?;
        Ok(self.client.generate_all(&requests, &self.log))
    }
}
