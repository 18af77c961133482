use serde_json::{json, Value};

use super::ModelClient;
use crate::error::{Error, Result};

const BATCH: usize = 64;

fn scores_from(value: &Value, expected: usize, positive: &str) -> Result<Vec<f64>> {
    let scores: Vec<f64> = if let Some(list) = value.get("scores").or_else(|| value.get("probabilities")).and_then(Value::as_array) {
        list.iter()
            .map(|v| v.as_f64().ok_or_else(|| Error::MalformedResponse("non-numeric score".into())))
            .collect::<Result<_>>()?
    } else if let Some(list) = value.get("labels").and_then(Value::as_array) {
        list.iter()
            .map(|v| match v.as_str() {
                Some(l) if l.eq_ignore_ascii_case(positive) => Ok(1.0),
                Some(_) => Ok(0.0),
                None => Err(Error::MalformedResponse("non-string label".into())),
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::MalformedResponse("expected `scores`, `probabilities` or `labels`".into()));
    };
    if scores.len() != expected {
        return Err(Error::MalformedResponse(format!("{} scores for {expected} texts", scores.len())));
    }
    Ok(scores)
}

/// Percentage of texts a binary classifier endpoint assigns to the
/// positive class (probability >= 0.5). Request: `{"model", "texts": [...]}`;
/// response: `{"scores": [p, ...]}` or `{"labels": [label, ...]}`, where a
/// label equal to `positive_label` counts as positive.
pub fn classifier_accuracy(texts: &[String], client: &ModelClient, positive_label: &str) -> Result<f64> {
    if texts.is_empty() {
        return Err(Error::metric("classifier_accuracy", "no texts"));
    }
    let mut hits = 0usize;
    for chunk in texts.chunks(BATCH) {
        let (value, _) = client.post(&json!({ "model": client.config.model, "texts": chunk }))?;
        hits += scores_from(&value, chunk.len(), positive_label)?.iter().filter(|&&p| p >= 0.5).count();
    }
    Ok(100.0 * hits as f64 / texts.len() as f64)
}

/// Formality transfer accuracy: share of texts classified formal.
pub fn score_formality(texts: &[String], client: &ModelClient) -> Result<f64> {
    classifier_accuracy(texts, client, "formal")
}

fn embeddings_from(value: &Value, expected: usize) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<&Value> = if let Some(data) = value.get("data").and_then(Value::as_array) {
        data.iter()
            .map(|d| d.get("embedding").ok_or_else(|| Error::MalformedResponse("missing `embedding`".into())))
            .collect::<Result<_>>()?
    } else if let Some(list) = value.get("embeddings").and_then(Value::as_array) {
        list.iter().collect()
    } else {
        return Err(Error::MalformedResponse("expected `data` or `embeddings`".into()));
    };
    if rows.len() != expected {
        return Err(Error::MalformedResponse(format!("{} embeddings for {expected} texts", rows.len())));
    }
    rows.into_iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::MalformedResponse("embedding is not an array".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::MalformedResponse("non-numeric embedding".into())))
                .collect()
        })
        .collect()
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// 100 x mean cosine similarity between embeddings of each pair, with
/// negative cosines counted as 0. Request: `{"model", "input": [...]}`;
/// response: `{"data": [{"embedding": [...]}, ...]}` or `{"embeddings": [[...], ...]}`.
pub fn semantic_similarity(pairs: &[(String, String)], client: &ModelClient) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::metric("semantic_similarity", "no pairs"));
    }
    let mut total = 0.0;
    for chunk in pairs.chunks(BATCH / 2) {
        let texts: Vec<&str> = chunk.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect();
        let (value, _) = client.post(&json!({ "model": client.config.model, "input": texts }))?;
        let vectors = embeddings_from(&value, texts.len())?;
        for pair in vectors.chunks(2) {
            total += cosine(&pair[0], &pair[1])?;
        }
    }
    Ok(100.0 * total / pairs.len() as f64)
}
