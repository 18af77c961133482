//! Instruction template banks and instruction rendering.
//!
//! Banks are plain-text files, one per task (`gec.txt`, `paraphrase.txt`,
//! ...), one verbalizer per line, `#` lines ignored. Entries are stored
//! without a trailing colon; rendering appends the separator.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, IoContext, Result};
use crate::model::{CompositeTask, EditTask};

const SHIPPED: [(EditTask, &str); 9] = [
    (EditTask::Gec, include_str!("../banks/gec.txt")),
    (EditTask::Coherence, include_str!("../banks/coherence.txt")),
    (EditTask::Clarity, include_str!("../banks/clarity.txt")),
    (EditTask::Simplification, include_str!("../banks/simplification.txt")),
    (EditTask::Paraphrase, include_str!("../banks/paraphrase.txt")),
    (EditTask::Formalize, include_str!("../banks/formalize.txt")),
    (EditTask::Neutralize, include_str!("../banks/neutralize.txt")),
    (EditTask::Compression, include_str!("../banks/compression.txt")),
    (EditTask::Politeness, include_str!("../banks/politeness.txt")),
];

pub fn parse_bank_file(contents: &str) -> Vec<String> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateBank {
    entries: BTreeMap<EditTask, Vec<String>>,
}

/// A rendered composite instruction along with the draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    /// Joined instruction, without the trailing colon.
    pub body: String,
    /// Bank index drawn for each task, in the composite's stored order.
    pub picks: Vec<usize>,
    /// Presentation order, as indices into the stored task list.
    pub order: Vec<usize>,
}

impl Composition {
    pub fn text(&self) -> String {
        format!("{}:", self.body)
    }
}

impl TemplateBank {
    pub fn shipped() -> Self {
        let entries = SHIPPED
            .iter()
            .map(|(task, text)| (*task, parse_bank_file(text)))
            .collect();
        Self { entries }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (EditTask, Vec<String>)>) -> Self {
        Self {
            entries: entries.into_iter().collect(),
        }
    }

    /// Loads `<task>.txt` files from `dir`. Files whose stem is not a task name
    /// are ignored.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let listing = fs::read_dir(dir).io_context(|| format!("reading bank dir {}", dir.display()))?;
        for entry in listing {
            let path = entry.io_context(|| format!("reading bank dir {}", dir.display()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(task) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<EditTask>().ok())
            else {
                continue;
            };
            let text = fs::read_to_string(&path).io_context(|| format!("reading {}", path.display()))?;
            entries.insert(task, parse_bank_file(&text));
        }
        Ok(Self { entries })
    }

    pub fn tasks(&self) -> impl Iterator<Item = EditTask> + '_ {
        self.entries.keys().copied()
    }

    pub fn paraphrase_variants(&self, task: EditTask) -> Result<&[String]> {
        match self.entries.get(&task) {
            Some(list) if !list.is_empty() => Ok(list),
            _ => Err(Error::EmptyBank(task.name().to_owned())),
        }
    }

    pub fn contains(&self, task: EditTask, instruction: &str) -> bool {
        self.entries
            .get(&task)
            .is_some_and(|l| l.iter().any(|e| e == instruction))
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, task: EditTask, rng: &mut R) -> Result<usize> {
        let list = self.paraphrase_variants(task)?;
        Ok(rng.gen_range(0..list.len()))
    }

    pub fn sample_instruction<R: Rng + ?Sized>(&self, task: EditTask, rng: &mut R) -> Result<&str> {
        let idx = self.sample_index(task, rng)?;
        Ok(&self.entries[&task][idx])
    }

    /// Draws one verbalizer per task, shuffles the presentation order and
    /// joins them as `V1, v2, and v3`.
    pub fn compose<R: Rng + ?Sized>(&self, tasks: &CompositeTask, rng: &mut R) -> Result<Composition> {
        let picks = tasks
            .tasks()
            .iter()
            .map(|&t| self.sample_index(t, rng))
            .collect::<Result<Vec<_>>>()?;
        let mut order: Vec<usize> = (0..picks.len()).collect();
        order.shuffle(rng);
        let parts: Vec<&str> = order
            .iter()
            .map(|&i| self.entries[&tasks.tasks()[i]][picks[i]].as_str())
            .collect();
        Ok(Composition {
            body: join_verbalizers(&parts),
            picks,
            order,
        })
    }

    pub fn compose_composite<R: Rng + ?Sized>(&self, tasks: &CompositeTask, rng: &mut R) -> Result<String> {
        Ok(self.compose(tasks, rng)?.text())
    }

    /// Checks whether `body` (no trailing colon) is a joined composition of one
    /// bank entry per task in some order.
    pub fn is_composition_of(&self, tasks: &[EditTask], body: &str) -> bool {
        let mut used = vec![false; tasks.len()];
        self.match_parts(tasks, &mut used, body, 0)
    }

    fn match_parts(&self, tasks: &[EditTask], used: &mut [bool], rest: &str, pos: usize) -> bool {
        let n = tasks.len();
        if pos == n {
            return rest.is_empty();
        }
        let sep = match pos {
            0 => "",
            p if p == n - 1 => ", and ",
            _ => ", ",
        };
        let Some(rest) = rest.strip_prefix(sep) else {
            return false;
        };
        for i in 0..n {
            if used[i] {
                continue;
            }
            let Some(list) = self.entries.get(&tasks[i]) else {
                continue;
            };
            for entry in list {
                let candidate = if pos == 0 {
                    entry.clone()
                } else {
                    lowercase_first(entry)
                };
                if let Some(tail) = rest.strip_prefix(candidate.as_str()) {
                    used[i] = true;
                    if self.match_parts(tasks, used, tail, pos + 1) {
                        return true;
                    }
                    used[i] = false;
                }
            }
        }
        false
    }
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn join_verbalizers(parts: &[&str]) -> String {
    let mut out = String::new();
    let last = parts.len() - 1;
    for (i, part) in parts.iter().enumerate() {
        if i == 0 {
            out.push_str(part);
            continue;
        }
        out.push_str(if i == last { ", and " } else { ", " });
        out.push_str(&lowercase_first(part));
    }
    out
}
