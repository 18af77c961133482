//! Corpus adapters: each registered corpus id maps to a file layout and an
//! edit task. Adapters produce normalized, validated [`EditPair`]s.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::model::{EditPair, EditTask, Split, TaskSpec};
use crate::text::NormalizationPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// `{"source", "target", "split"?, "references"?, "annotations"?, "task"?}` per line.
    Jsonl,
    /// `source<TAB>target[<TAB>more references]`.
    Tsv,
    /// One sentence per line in a source file, with aligned reference files
    /// found next to it (`.orig`/`.simp.N`, `.src`/`.refN`, `informal`/`formal.refN`, ...).
    Parallel,
    /// M2 annotation blocks (`S` sentence, `A` edits per annotator).
    M2,
    /// Tab-separated bias-neutralization rows; raw source and target are columns 4 and 5.
    Wnc,
    /// DiscoFuse tsv with header; incoherent sentences in, coherent sentences out.
    Discofuse,
    /// IteraTeR JSON lines (`before_sent`, `after_sent`, `labels`).
    Iterater,
    /// MRPC tsv with header; only rows with `Quality` 1.
    Mrpc,
    /// QQP tsv with header; only rows with `is_duplicate` 1.
    Qqp,
    /// STS-B tsv with header; only rows with `score` >= 4.
    Sts,
    /// ParaBank rows: optional leading score, sentence, then paraphrases.
    Parabank,
    /// One source sentence per line, no targets.
    Lines,
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown corpus format `{s}`")))
    }
}

/// How a corpus id is read and which task its pairs belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub id: String,
    pub format: CorpusFormat,
    /// `None` only for IteraTeR, where the task comes from each row's label.
    #[serde(default)]
    pub task: Option<TaskSpec>,
}

#[derive(Debug, Clone)]
pub struct CorpusRegistry {
    specs: BTreeMap<String, CorpusSpec>,
}

impl Default for CorpusRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl CorpusRegistry {
    pub fn empty() -> Self {
        Self { specs: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        use CorpusFormat as F;
        use EditTask as T;
        let mut reg = Self::empty();
        let entries: &[(&str, CorpusFormat, Option<EditTask>)] = &[
            ("nucle", F::M2, Some(T::Gec)),
            ("lang8", F::M2, Some(T::Gec)),
            ("bea19", F::M2, Some(T::Gec)),
            ("fce", F::M2, Some(T::Gec)),
            ("jfleg", F::Parallel, Some(T::Gec)),
            ("iterater", F::Iterater, None),
            ("iterater-fluency", F::Iterater, Some(T::Gec)),
            ("iterater-coherence", F::Iterater, Some(T::Coherence)),
            ("iterater-clarity", F::Iterater, Some(T::Clarity)),
            ("discofuse", F::Discofuse, Some(T::Coherence)),
            ("discofuse-wiki", F::Discofuse, Some(T::Coherence)),
            ("discofuse-sport", F::Discofuse, Some(T::Coherence)),
            ("asset", F::Parallel, Some(T::Simplification)),
            ("turkcorpus", F::Parallel, Some(T::Simplification)),
            ("wikilarge", F::Parallel, Some(T::Simplification)),
            ("wikiauto", F::Tsv, Some(T::Simplification)),
            ("newsela", F::Tsv, Some(T::Simplification)),
            ("gyafc", F::Parallel, Some(T::Formalize)),
            ("wnc", F::Wnc, Some(T::Neutralize)),
            ("parabank", F::Parabank, Some(T::Paraphrase)),
            ("mrpc", F::Mrpc, Some(T::Paraphrase)),
            ("qqp", F::Qqp, Some(T::Paraphrase)),
            ("sts", F::Sts, Some(T::Paraphrase)),
            ("compression", F::Tsv, Some(T::Compression)),
            ("politeness", F::Lines, Some(T::Politeness)),
        ];
        for (id, format, task) in entries {
            reg.specs.insert(
                id.to_string(),
                CorpusSpec {
                    id: id.to_string(),
                    format: *format,
                    task: task.map(TaskSpec::from),
                },
            );
        }
        reg
    }

    pub fn register(&mut self, spec: CorpusSpec) -> Result<()> {
        if spec.task.is_none() && spec.format != CorpusFormat::Iterater && spec.format != CorpusFormat::Jsonl {
            return Err(Error::Config(format!("corpus `{}` needs a task", spec.id)));
        }
        self.specs.insert(spec.id.clone(), spec);
        Ok(())
    }

    pub fn get(&self, corpus_id: &str) -> Result<&CorpusSpec> {
        self.specs
            .get(corpus_id)
            .ok_or_else(|| Error::UnknownCorpus(corpus_id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.specs.keys().map(String::as_str)
    }

    /// Reads `path` with the adapter registered for `corpus_id`. The split is
    /// `split` if given, else a per-row label (JSON lines), else inferred
    /// from the file path.
    pub fn ingest(&self, corpus_id: &str, path: &Path, split: Option<Split>) -> Result<Vec<EditPair>> {
        let spec = self.get(corpus_id)?;
        let path_split = split.or_else(|| split_from_path(path));
        let rows = read_rows(spec.format, path)?;
        let policy = NormalizationPolicy::default();
        let mut pairs = Vec::with_capacity(rows.len());
        for row in rows {
            let fail = |reason: String| Error::Format {
                path: path.to_path_buf(),
                line: row.line,
                reason,
            };
            if row.skip_without_task && row.task.is_none() {
                continue;
            }
            let task = match (&spec.task, &row.task) {
                (Some(fixed), Some(found)) if fixed != found => continue,
                (Some(fixed), _) => fixed.clone(),
                (None, Some(found)) => found.clone(),
                (None, None) => return Err(fail("row has no task and the corpus declares none".into())),
            };
            let row_split = split
                .or(row.split)
                .or(path_split)
                .ok_or_else(|| fail("cannot tell the split; pass it explicitly".into()))?;
            let mut pair = EditPair::new(row.source, row.target, task, corpus_id, row_split);
            if let Some(refs) = row.references {
                pair = pair.with_references(refs);
            }
            pair.annotations = row.annotations;
            let pair = pair.normalized(&policy);
            pair.validate().map_err(|e| fail(e.to_string()))?;
            pairs.push(pair);
        }
        Ok(pairs)
    }
}

/// Split named by the file name or, failing that, a parent directory.
pub fn split_from_path(path: &Path) -> Option<Split> {
    path.iter().rev().find_map(|component| {
        let name = component.to_string_lossy().to_ascii_lowercase();
        name.split(|c: char| !c.is_ascii_alphanumeric()).find_map(Split::from_label)
    })
}

struct RawRow {
    line: usize,
    source: String,
    target: String,
    references: Option<Vec<String>>,
    split: Option<Split>,
    task: Option<TaskSpec>,
    annotations: BTreeMap<String, f64>,
    /// Rows whose label maps to no supported task are dropped, not errors.
    skip_without_task: bool,
}

impl RawRow {
    fn new(line: usize, source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            line,
            source: source.into(),
            target: target.into(),
            references: None,
            split: None,
            task: None,
            annotations: BTreeMap::new(),
            skip_without_task: false,
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
    Ok(text.strip_prefix('\u{feff}').map(str::to_string).unwrap_or(text))
}

/// Non-empty lines with 1-based line numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
}

fn format_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn read_rows(format: CorpusFormat, path: &Path) -> Result<Vec<RawRow>> {
    match format {
        CorpusFormat::Jsonl => read_jsonl(path),
        CorpusFormat::Tsv => read_tsv(path),
        CorpusFormat::Parallel => read_parallel(path),
        CorpusFormat::M2 => read_m2(path),
        CorpusFormat::Wnc => read_wnc(path),
        CorpusFormat::Discofuse => read_header_tsv(path, &["incoherent_first_sentence", "incoherent_second_sentence"], &["coherent_first_sentence", "coherent_second_sentence"], None),
        CorpusFormat::Iterater => read_iterater(path),
        CorpusFormat::Mrpc => read_header_tsv(path, &["#1 String"], &["#2 String"], Some(("Quality", 1.0))),
        CorpusFormat::Qqp => read_header_tsv(path, &["question1"], &["question2"], Some(("is_duplicate", 1.0))),
        CorpusFormat::Sts => read_header_tsv(path, &["sentence1"], &["sentence2"], Some(("score", 4.0))),
        CorpusFormat::Parabank => read_parabank(path),
        CorpusFormat::Lines => read_lines(path),
    }
}

#[derive(Deserialize)]
struct JsonRow {
    source: String,
    #[serde(default)]
    target: String,
    #[serde(default)]
    split: Option<String>,
    #[serde(default)]
    references: Option<Vec<String>>,
    #[serde(default)]
    task: Option<TaskSpec>,
    #[serde(default)]
    annotations: BTreeMap<String, f64>,
}

fn read_jsonl(path: &Path) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (line, l) in numbered_lines(&text) {
        if l.trim().is_empty() {
            continue;
        }
        let j: JsonRow = serde_json::from_str(l).map_err(|e| format_err(path, line, e.to_string()))?;
        let mut row = RawRow::new(line, j.source, j.target);
        if let Some(s) = j.split {
            row.split = Some(Split::from_label(&s).ok_or_else(|| format_err(path, line, format!("unknown split `{s}`")))?);
        }
        row.references = j.references;
        row.task = j.task;
        row.annotations = j.annotations;
        rows.push(row);
    }
    Ok(rows)
}

fn read_tsv(path: &Path) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (line, l) in numbered_lines(&text) {
        if l.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() < 2 {
            return Err(format_err(path, line, "expected at least 2 tab-separated columns"));
        }
        let mut row = RawRow::new(line, cols[0], cols[1]);
        if cols.len() > 2 {
            row.references = Some(cols[1..].iter().map(|c| c.to_string()).collect());
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_lines(path: &Path) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    Ok(numbered_lines(&text)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(line, l)| RawRow::new(line, l, ""))
        .collect())
}

fn read_parabank(path: &Path) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (line, l) in numbered_lines(&text) {
        if l.trim().is_empty() {
            continue;
        }
        let mut cols: Vec<&str> = l.split('\t').collect();
        if cols.len() > 2 && cols[0].trim().parse::<f64>().is_ok() {
            cols.remove(0);
        }
        if cols.len() < 2 {
            return Err(format_err(path, line, "expected a sentence and at least one paraphrase"));
        }
        rows.push(RawRow::new(line, cols[0], cols[1]));
    }
    Ok(rows)
}

fn read_wnc(path: &Path) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (line, l) in numbered_lines(&text) {
        if l.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() < 5 {
            return Err(format_err(path, line, "expected at least 5 tab-separated columns"));
        }
        rows.push(RawRow::new(line, cols[3], cols[4]));
    }
    Ok(rows)
}

fn read_header_tsv(path: &Path, source_cols: &[&str], target_cols: &[&str], keep: Option<(&str, f64)>) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    let mut lines = numbered_lines(&text);
    let (_, header) = lines.next().ok_or_else(|| format_err(path, 1, "missing header"))?;
    let names: Vec<&str> = header.split('\t').map(str::trim).collect();
    let index = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| format_err(path, 1, format!("missing column `{name}`")))
    };
    let src_idx = source_cols.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?;
    let tgt_idx = target_cols.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?;
    let keep_idx = keep.map(|(c, min)| index(c).map(|i| (i, min))).transpose()?;

    let mut rows = Vec::new();
    for (line, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        let cell = |i: usize| {
            cols.get(i)
                .map(|c| c.trim())
                .ok_or_else(|| format_err(path, line, format!("missing column {}", i + 1)))
        };
        if let Some((i, min)) = keep_idx {
            let v: f64 = cell(i)?
                .parse()
                .map_err(|_| format_err(path, line, format!("column `{}` is not a number", names[i])))?;
            if v < min {
                continue;
            }
        }
        let join = |idx: &[usize]| -> Result<String> {
            let parts = idx.iter().map(|&i| cell(i)).collect::<Result<Vec<_>>>()?;
            Ok(parts.into_iter().filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" "))
        };
        rows.push(RawRow::new(line, join(&src_idx)?, join(&tgt_idx)?));
    }
    Ok(rows)
}

fn iterater_task(label: &str) -> Option<EditTask> {
    match label {
        "fluency" => Some(EditTask::Gec),
        "coherence" => Some(EditTask::Coherence),
        "clarity" => Some(EditTask::Clarity),
        _ => None,
    }
}

fn read_iterater(path: &Path) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (line, l) in numbered_lines(&text) {
        if l.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(l).map_err(|e| format_err(path, line, e.to_string()))?;
        let field = |name: &str| {
            v.get(name)
                .and_then(|x| x.as_str())
                .ok_or_else(|| format_err(path, line, format!("missing string field `{name}`")))
        };
        let mut row = RawRow::new(line, field("before_sent")?, field("after_sent")?);
        let label = match v.get("labels") {
            Some(serde_json::Value::String(s)) => Some(s.clone()),
            Some(serde_json::Value::Array(a)) => a.first().and_then(|x| x.as_str()).map(str::to_string),
            _ => None,
        };
        row.task = label.as_deref().and_then(iterater_task).map(TaskSpec::from);
        row.skip_without_task = true;
        rows.push(row);
    }
    Ok(rows)
}

fn read_m2(path: &Path) -> Result<Vec<RawRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    let mut current: Option<(usize, Vec<String>, BTreeMap<u32, Vec<(usize, usize, String)>>)> = None;

    fn finish(block: (usize, Vec<String>, BTreeMap<u32, Vec<(usize, usize, String)>>), rows: &mut Vec<RawRow>) {
        let (line, tokens, mut edits) = block;
        edits.entry(0).or_default();
        let targets: Vec<String> = edits
            .into_values()
            .map(|mut es| {
                es.sort_by_key(|e| (e.0, e.1));
                let mut out: Vec<String> = Vec::new();
                let mut pos = 0;
                for (start, end, corr) in es {
                    if start < pos {
                        continue;
                    }
                    out.extend(tokens[pos..start].iter().cloned());
                    out.extend(corr.split_whitespace().map(str::to_string));
                    pos = end;
                }
                out.extend(tokens[pos..].iter().cloned());
                out.join(" ")
            })
            .collect();
        let mut row = RawRow::new(line, tokens.join(" "), targets[0].clone());
        if targets.len() > 1 {
            row.references = Some(targets);
        }
        rows.push(row);
    }

    for (line, l) in numbered_lines(&text) {
        if let Some(sentence) = l.strip_prefix("S ") {
            if let Some(block) = current.take() {
                finish(block, &mut rows);
            }
            let tokens = sentence.split_whitespace().map(str::to_string).collect();
            current = Some((line, tokens, BTreeMap::new()));
        } else if let Some(edit) = l.strip_prefix("A ") {
            let (_, tokens, edits) = current
                .as_mut()
                .ok_or_else(|| format_err(path, line, "edit line before any sentence"))?;
            let fields: Vec<&str> = edit.split("|||").collect();
            if fields.len() < 6 {
                return Err(format_err(path, line, "edit line needs 6 `|||` fields"));
            }
            let span: Vec<&str> = fields[0].split_whitespace().collect();
            let parse = |s: Option<&&str>| s.and_then(|x| x.parse::<i64>().ok());
            let (start, end) = match (parse(span.first()), parse(span.get(1))) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(format_err(path, line, "bad edit span")),
            };
            let annotator: u32 = fields[5]
                .trim()
                .parse()
                .map_err(|_| format_err(path, line, "bad annotator id"))?;
            let entry = edits.entry(annotator).or_default();
            if fields[1] == "noop" || start < 0 {
                continue;
            }
            let (start, end) = (start as usize, end as usize);
            if start > end || end > tokens.len() {
                return Err(format_err(path, line, "edit span outside the sentence"));
            }
            entry.push((start, end, fields[2].trim().to_string()));
        } else if !l.trim().is_empty() {
            return Err(format_err(path, line, "expected an `S` or `A` line"));
        }
    }
    if let Some(block) = current.take() {
        finish(block, &mut rows);
    }
    Ok(rows)
}

/// Source-name / reference-name pairs tried in order; `{i}` numbers
/// multiple references from 0.
const PARALLEL_LAYOUTS: &[(&str, &str)] = &[
    (".orig", ".simp.{i}"),
    (".norm", ".turk.{i}"),
    (".src", ".ref{i}"),
    (".src", ".dst"),
    (".src", ".tgt"),
    (".complex", ".simple"),
    ("informal", "formal.ref{i}"),
    ("informal", "formal"),
];

/// Reference files aligned with a parallel-format source file.
pub fn discover_references(source: &Path) -> Option<Vec<PathBuf>> {
    let name = source.file_name()?.to_string_lossy().to_string();
    for (src_suffix, ref_pattern) in PARALLEL_LAYOUTS {
        let Some(stem) = name.strip_suffix(src_suffix) else {
            continue;
        };
        let sibling = |suffix: String| source.with_file_name(format!("{stem}{suffix}"));
        let found: Vec<PathBuf> = if ref_pattern.contains("{i}") {
            (0..)
                .map(|i| sibling(ref_pattern.replace("{i}", &i.to_string())))
                .take_while(|p| p.is_file())
                .collect()
        } else {
            Some(sibling(ref_pattern.to_string())).filter(|p| p.is_file()).into_iter().collect()
        };
        if !found.is_empty() {
            return Some(found);
        }
    }
    None
}

fn read_parallel(path: &Path) -> Result<Vec<RawRow>> {
    let ref_paths = discover_references(path)
        .ok_or_else(|| format_err(path, 1, "no aligned reference file found next to the source file"))?;
    let sources = read_text(path)?;
    let sources: Vec<&str> = sources.lines().collect();
    let mut refs: Vec<Vec<String>> = Vec::new();
    for p in &ref_paths {
        let text = read_text(p)?;
        let lines: Vec<String> = text.lines().map(str::to_string).collect();
        if lines.len() != sources.len() {
            return Err(format_err(
                p,
                lines.len().min(sources.len()) + 1,
                format!("{} lines, source has {}", lines.len(), sources.len()),
            ));
        }
        refs.push(lines);
    }
    Ok(sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let all: Vec<String> = refs.iter().map(|r| r[i].clone()).collect();
            let mut row = RawRow::new(i + 1, *s, all[0].clone());
            if all.len() > 1 {
                row.references = Some(all);
            }
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn tsv_three_lines() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "train.tsv", "a b\tc\nd\te\nf\tg\n");
        let pairs = CorpusRegistry::builtin().ingest("newsela", &p, None).unwrap();
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| p.split == Split::Train));
    }

    #[test]
    fn empty_source_is_a_format_error_with_line() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "train.tsv", "a\tb\n  \tc\n");
        match CorpusRegistry::builtin().ingest("newsela", &p, None) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_corpus() {
        let err = CorpusRegistry::builtin().ingest("nope", Path::new("x"), None).unwrap_err();
        assert!(matches!(err, Error::UnknownCorpus(_)));
    }

    #[test]
    fn jfleg_layout_gives_four_references() {
        let d = tempfile::tempdir().unwrap();
        let src = write(d.path(), "test.src", "he go home .\nshe like it .\n");
        for i in 0..4 {
            write(d.path(), &format!("test.ref{i}"), &format!("he goes home {i} .\nshe likes it {i} .\n"));
        }
        let pairs = CorpusRegistry::builtin().ingest("jfleg", &src, None).unwrap();
        assert_eq!(pairs.len(), 2);
        for p in &pairs {
            let refs = p.references.as_ref().unwrap();
            assert_eq!(refs.len(), 4);
            assert_eq!(refs[0], p.target);
            assert_eq!(p.split, Split::Test);
        }
    }

    #[test]
    fn misaligned_reference_file() {
        let d = tempfile::tempdir().unwrap();
        let src = write(d.path(), "asset.test.orig", "a\nb\n");
        write(d.path(), "asset.test.simp.0", "a\n");
        assert!(matches!(
            CorpusRegistry::builtin().ingest("asset", &src, None),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn m2_applies_first_annotator() {
        let d = tempfile::tempdir().unwrap();
        let body = "S He go to school .\nA 1 2|||R:VERB:SVA|||goes|||REQUIRED|||-NONE-|||0\nA 1 2|||R:VERB:TENSE|||went|||REQUIRED|||-NONE-|||1\n\nS Fine .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n";
        let p = write(d.path(), "nucle.train.m2", body);
        let pairs = CorpusRegistry::builtin().ingest("nucle", &p, None).unwrap();
        assert_eq!(pairs[0].target, "He goes to school .");
        assert_eq!(pairs[0].references.as_ref().unwrap()[1], "He went to school .");
        assert_eq!(pairs[1].target, "Fine .");
    }

    #[test]
    fn mrpc_keeps_positive_rows() {
        let d = tempfile::tempdir().unwrap();
        let body = "Quality\t#1 ID\t#2 ID\t#1 String\t#2 String\n1\t1\t2\tA cat sat.\tA cat was sitting.\n0\t3\t4\tNo.\tYes.\n";
        let p = write(d.path(), "msr_paraphrase_test.txt", body);
        let pairs = CorpusRegistry::builtin().ingest("mrpc", &p, None).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].target, "A cat was sitting.");
    }

    #[test]
    fn iterater_filters_by_intent() {
        let d = tempfile::tempdir().unwrap();
        let body = concat!(
            r#"{"before_sent":"a b","after_sent":"a c","labels":"clarity"}"#, "\n",
            r#"{"before_sent":"d","after_sent":"e","labels":"fluency"}"#, "\n",
            r#"{"before_sent":"f","after_sent":"g","labels":"meaning-changed"}"#, "\n",
        );
        let p = write(d.path(), "dev.json", body);
        let reg = CorpusRegistry::builtin();
        assert_eq!(reg.ingest("iterater", &p, None).unwrap().len(), 2);
        let clarity = reg.ingest("iterater-clarity", &p, None).unwrap();
        assert_eq!(clarity.len(), 1);
        assert_eq!(clarity[0].split, Split::Validation);
    }

    #[test]
    fn discofuse_joins_sentences() {
        let d = tempfile::tempdir().unwrap();
        let body = "coherent_first_sentence\tcoherent_second_sentence\tincoherent_first_sentence\tincoherent_second_sentence\tdiscourse_type\nIt rained, so we left.\t\tIt rained.\tWe left.\tPAIR_CONN\n";
        let p = write(d.path(), "test_balanced.tsv", body);
        let pairs = CorpusRegistry::builtin().ingest("discofuse", &p, None).unwrap();
        assert_eq!(pairs[0].source, "It rained. We left.");
        assert_eq!(pairs[0].target, "It rained, so we left.");
    }

    #[test]
    fn wnc_raw_columns() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "biased.word.test", "1\tsrc tok\ttgt tok\tThe great man.\tThe man.\tx\ty\n");
        let pairs = CorpusRegistry::builtin().ingest("wnc", &p, None).unwrap();
        assert_eq!((pairs[0].source.as_str(), pairs[0].target.as_str()), ("The great man.", "The man."));
    }

    #[test]
    fn split_inference() {
        assert_eq!(split_from_path(Path::new("gyafc/Family_Relationships/tune/informal")), Some(Split::Validation));
        assert_eq!(split_from_path(Path::new("data/wiki.full.aner.ori.train.src")), Some(Split::Train));
        assert_eq!(split_from_path(Path::new("x/y.txt")), None);
    }
}
