//! Table rendering for one or more score reports: systems as rows,
//! `dataset:metric` columns, and an Overall column.

use std::fmt::Write as _;
use std::str::FromStr;

use super::MetricName;
use crate::error::{Error, Result};
use crate::model::{RunMetadata, ScoreReport};

const ERROR_PREFIX: &str = "error: ";
const OVERALL: &str = "overall";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Txt,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "txt" | "text" => Ok(Self::Txt),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// Mean over the configured cells, each cell the mean of its metrics with
/// Self-BLEU entering as `100 - value`. `None` when no cells are configured
/// or a cell value is missing.
pub fn overall_score(report: &ScoreReport) -> Option<f64> {
    let cells = &report.metadata.overall;
    if cells.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for cell in cells {
        if cell.metrics.is_empty() {
            return None;
        }
        let mut sum = 0.0;
        for m in &cell.metrics {
            let v = report.get(&cell.dataset_id, m)?;
            sum += if MetricName::is_inverse(m) { 100.0 - v } else { v };
        }
        total += sum / cell.metrics.len() as f64;
    }
    Some(total / cells.len() as f64)
}

fn columns(reports: &[ScoreReport]) -> Result<Vec<(String, String)>> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Config("no reports to render".into()))?;
    let keys: Vec<(String, String)> = first
        .rows
        .iter()
        .map(|r| (r.dataset_id.clone(), r.metric.clone()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    for r in &reports[1..] {
        if r.metadata.suite_id != first.metadata.suite_id {
            return Err(Error::SuiteMismatch(format!(
                "`{}` uses suite `{}`, `{}` uses `{}`",
                first.system_id, first.metadata.suite_id, r.system_id, r.metadata.suite_id
            )));
        }
        let mut other: Vec<(String, String)> = r.rows.iter().map(|x| (x.dataset_id.clone(), x.metric.clone())).collect();
        other.sort();
        if other != sorted {
            return Err(Error::SuiteMismatch(format!(
                "`{}` and `{}` score different dataset/metric sets",
                first.system_id, r.system_id
            )));
        }
    }
    Ok(keys)
}

fn cell(report: &ScoreReport, dataset: &str, metric: &str, precise: bool) -> String {
    match report.get_row(dataset, metric) {
        Some(row) => match (row.value, &row.error) {
            (Some(v), _) if precise => v.to_string(),
            (Some(v), _) => format!("{v:.1}"),
            (None, Some(e)) if precise => format!("{ERROR_PREFIX}{e}"),
            (None, _) => "ERR".into(),
        },
        None => String::new(),
    }
}

/// Full-precision CSV with columns `system,suite,<dataset:metric>...,overall`.
/// Failed cells hold `error: <message>`.
pub fn render_csv(reports: &[ScoreReport]) -> Result<String> {
    let keys = columns(reports)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["system".to_string(), "suite".to_string()];
    header.extend(keys.iter().map(|(d, m)| format!("{d}:{m}")));
    header.push(OVERALL.into());
    w.write_record(&header).map_err(csv_err)?;
    for r in reports {
        let mut rec = vec![r.system_id.clone(), r.metadata.suite_id.clone()];
        rec.extend(keys.iter().map(|(d, m)| cell(r, d, m, true)));
        rec.push(overall_score(r).map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Aligned text table with one decimal place.
pub fn render_text(reports: &[ScoreReport]) -> Result<String> {
    let keys = columns(reports)?;
    let mut header = vec!["system".to_string()];
    header.extend(keys.iter().map(|(d, m)| format!("{d}:{m}")));
    header.push("Overall".into());
    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![r.system_id.clone()];
        row.extend(keys.iter().map(|(d, m)| cell(r, d, m, false)));
        row.push(overall_score(r).map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()));
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (c, text) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{text:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {text:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn render(reports: &[ScoreReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => render_csv(reports),
        ReportFormat::Txt => render_text(reports),
    }
}

/// Parses CSV written by [`render_csv`] back into reports. Only the suite
/// id survives in the metadata; the overall column is recomputed, not read.
pub fn parse_csv(text: &str) -> Result<Vec<ScoreReport>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 3 || &header[0] != "system" || &header[1] != "suite" || &header[header.len() - 1] != OVERALL {
        return Err(Error::Config("not a score report CSV".into()));
    }
    let keys = header
        .iter()
        .skip(2)
        .take(header.len() - 3)
        .map(|k| {
            k.split_once(':')
                .map(|(d, m)| (d.to_string(), m.to_string()))
                .ok_or_else(|| Error::Config(format!("bad column `{k}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut reports = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let metadata = RunMetadata {
            suite_id: rec[1].to_string(),
            ..RunMetadata::default()
        };
        let mut report = ScoreReport::new(&rec[0], metadata);
        for (i, (d, m)) in keys.iter().enumerate() {
            let raw = &rec[i + 2];
            if let Some(msg) = raw.strip_prefix(ERROR_PREFIX) {
                report.push_failure(d, m, msg.to_string())?;
            } else {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value `{raw}` in column {d}:{m}")))?;
                report.push_value(d, m, v)?;
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OverallCell;

    fn report(system: &str, suite: &str, rows: &[(&str, &str, f64)], overall: &[(&str, &[&str])]) -> ScoreReport {
        let metadata = RunMetadata {
            suite_id: suite.into(),
            overall: overall
                .iter()
                .map(|(d, ms)| OverallCell {
                    dataset_id: d.to_string(),
                    metrics: ms.iter().map(|m| m.to_string()).collect(),
                })
                .collect(),
            ..RunMetadata::default()
        };
        let mut r = ScoreReport::new(system, metadata);
        for (d, m, v) in rows {
            r.push_value(d, m, *v).unwrap();
        }
        r
    }

    #[test]
    fn overall_flips_self_bleu() {
        let r = report(
            "x",
            "s",
            &[("a", "sari", 40.0), ("b", "sari", 30.0), ("b", "self_bleu", 80.0)],
            &[("a", &["sari"]), ("b", &["sari", "self_bleu"])],
        );
        // cells: 40 and (30 + 20) / 2 = 25
        assert!((overall_score(&r).unwrap() - 32.5).abs() < 1e-12);
    }

    #[test]
    fn copy_row_under_default_cells() {
        // published Copy-baseline values; the printed Overall for this row is 27.6
        let suite = crate::harness::BenchmarkSuite::default_suite();
        let metadata = RunMetadata {
            suite_id: suite.id.clone(),
            overall: suite.overall.clone(),
            ..RunMetadata::default()
        };
        let mut r = ScoreReport::new("copy", metadata);
        for (d, m, v) in [
            ("iterater", "sari", 29.8),
            ("jfleg", "sari", 26.7),
            ("jfleg", "gleu", 40.5),
            ("asset", "sari", 20.7),
            ("discofuse-wiki", "sari", 30.8),
            ("gyafc", "sari", 17.6),
            ("gyafc", "formality_accuracy", 10.6),
            ("wnc", "sari", 31.85),
            ("wnc", "exact_match", 0.0),
        ] {
            r.push_value(d, m, v).unwrap();
        }
        let overall = overall_score(&r).unwrap();
        assert!((overall - 24.154).abs() < 0.01, "{overall}");
    }

    #[test]
    fn overall_missing_value_is_none() {
        let r = report("x", "s", &[("a", "sari", 40.0)], &[("a", &["gleu"])]);
        assert_eq!(overall_score(&r), None);
    }

    #[test]
    fn format_parse() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!("txt".parse::<ReportFormat>().unwrap(), ReportFormat::Txt);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
