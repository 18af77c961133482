use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::InstanceRecord;
use crate::rng::{self, sha256_hex, StreamRng};

pub const DEFAULT_SHOTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FewShotSpec {
    pub shot_count: usize,
    pub seed: u64,
}

impl Default for FewShotSpec {
    fn default() -> Self {
        Self {
            shot_count: DEFAULT_SHOTS,
            seed: 0,
        }
    }
}

/// Per-query exemplar stream, so each query's exemplars depend only on the
/// seed and the query itself.
pub fn fewshot_rng(spec: &FewShotSpec, query: &InstanceRecord) -> StreamRng {
    rng::stream(spec.seed, &format!("fewshot/{}", sha256_hex(query.input.as_bytes())))
}

/// Zero-shot: the query input itself. Few-shot: `shot_count` exemplar blocks
/// (`input` line, then `target` line) drawn without replacement from
/// same-task pool records, separated by blank lines, followed by the query.
pub fn build_prompt<R: Rng + ?Sized>(
    query: &InstanceRecord,
    fewshot: Option<(&FewShotSpec, &[InstanceRecord])>,
    rng: &mut R,
) -> Result<String> {
    let Some((spec, pool)) = fewshot.filter(|(s, _)| s.shot_count > 0) else {
        return Ok(query.input.clone());
    };
    let candidates: Vec<&InstanceRecord> = pool
        .iter()
        .filter(|r| r.task == query.task && r.input != query.input)
        .collect();
    if candidates.len() < spec.shot_count {
        return Err(Error::InsufficientExemplars {
            task: query.task.to_string(),
            requested: spec.shot_count,
            available: candidates.len(),
        });
    }
    let mut blocks: Vec<String> = index::sample(rng, candidates.len(), spec.shot_count)
        .into_iter()
        .map(|i| format!("{}\n{}", candidates[i].input, candidates[i].target))
        .collect();
    blocks.push(query.input.clone());
    Ok(blocks.join("\n\n"))
}
