//! Composite instructions executed as a sequence of single-task calls.

use rand::Rng;

use super::systems::TextEditor;
use crate::error::{Error, Result};
use crate::model::{render_input, EditTask, InstanceRecord, TaskSpec};
use crate::rng::{self, sha256_hex};
use crate::verbalizer::TemplateBank;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSource {
    /// The record's own source text.
    Original,
    /// Bound at run time to the previous step's output.
    PreviousOutput,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub task: EditTask,
    pub instruction: String,
    pub source: StepSource,
}

impl ChainStep {
    fn record(&self, base: &InstanceRecord, source: &str) -> InstanceRecord {
        InstanceRecord {
            instruction: self.instruction.clone(),
            input: render_input(&self.instruction, source),
            target: base.target.clone(),
            task: TaskSpec::Single(self.task),
            mode: base.mode,
            corpus_id: base.corpus_id.clone(),
            split: base.split,
            references: base.references.clone(),
        }
    }
}

/// One single-task step per component, in the composite's stored order.
/// Uses the record's task metadata; the instruction text is never parsed.
pub fn chain_decompose<R: Rng + ?Sized>(
    record: &InstanceRecord,
    bank: &TemplateBank,
    rng: &mut R,
) -> Result<Vec<ChainStep>> {
    let TaskSpec::Composite(composite) = &record.task else {
        return Err(Error::NotComposite(record.task.to_string()));
    };
    composite
        .tasks()
        .iter()
        .enumerate()
        .map(|(i, &task)| {
            Ok(ChainStep {
                task,
                instruction: bank.sample_instruction(task, rng)?.to_string(),
                source: if i == 0 { StepSource::Original } else { StepSource::PreviousOutput },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainRun {
    /// Output of every step; the last one is the final output.
    pub intermediates: Vec<String>,
}

impl ChainRun {
    pub fn output(&self) -> &str {
        self.intermediates.last().map(String::as_str).unwrap_or("")
    }
}

fn step_error(step: usize, e: Error) -> Error {
    Error::ChainStep {
        step,
        source: Box::new(e),
    }
}

/// Runs the steps one after another, feeding each output into the next.
/// Errors carry the 1-based step index.
pub fn run_chain(
    record: &InstanceRecord,
    steps: &[ChainStep],
    editor: &dyn TextEditor,
) -> Result<ChainRun> {
    let mut current = record
        .source()
        .ok_or_else(|| Error::validation("input", "does not start with its instruction"))?
        .to_string();
    let mut intermediates = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let rec = step.record(record, &current);
        let out = editor
            .edit_dataset("chain", std::slice::from_ref(&rec))
            .and_then(|mut v| v.pop().unwrap_or_else(|| Err(Error::MalformedResponse("no output".into()))))
            .map_err(|e| step_error(i + 1, e))?;
        intermediates.push(out.clone());
        current = out;
    }
    Ok(ChainRun { intermediates })
}

/// Wraps a system so composite records run as chains. Single-task records
/// go through unchanged. Step `k` of every record is sent as one batch, so
/// the inner system's concurrency still applies.
pub struct ChainSystem<E> {
    pub inner: E,
    pub bank: TemplateBank,
    pub seed: u64,
}

impl<E: TextEditor> ChainSystem<E> {
    pub fn new(inner: E, bank: TemplateBank, seed: u64) -> Self {
        Self { inner, bank, seed }
    }

    pub fn steps_for(&self, record: &InstanceRecord) -> Result<Vec<ChainStep>> {
        match &record.task {
            TaskSpec::Composite(_) => {
                let mut rng = rng::stream(self.seed, &format!("chain/{}", sha256_hex(record.input.as_bytes())));
                chain_decompose(record, &self.bank, &mut rng)
            }
            TaskSpec::Single(task) => Ok(vec![ChainStep {
                task: *task,
                instruction: record.instruction.clone(),
                source: StepSource::Original,
            }]),
        }
    }
}

impl<E: TextEditor> TextEditor for ChainSystem<E> {
    fn edit_dataset(&self, dataset_id: &str, records: &[InstanceRecord]) -> Result<Vec<Result<String>>> {
        let plans = records.iter().map(|r| self.steps_for(r)).collect::<Result<Vec<_>>>()?;
        let mut state: Vec<Result<String>> = records
            .iter()
            .map(|r| {
                r.source()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::validation("input", "does not start with its instruction"))
            })
            .collect();
        let depth = plans.iter().map(Vec::len).max().unwrap_or(0);
        for k in 0..depth {
            let mut idx = Vec::new();
            let mut batch = Vec::new();
            for (i, plan) in plans.iter().enumerate() {
                if let (Some(step), Ok(current)) = (plan.get(k), &state[i]) {
                    batch.push(step.record(&records[i], current));
                    idx.push(i);
                }
            }
            let outputs = self.inner.edit_dataset(dataset_id, &batch)?;
            if outputs.len() != batch.len() {
                return Err(Error::MalformedResponse(format!(
                    "{} outputs for {} chain inputs",
                    outputs.len(),
                    batch.len()
                )));
            }
            for (i, out) in idx.into_iter().zip(outputs) {
                state[i] = out.map_err(|e| step_error(k + 1, e));
            }
        }
        Ok(state)
    }
}
