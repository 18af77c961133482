//! Text normalization and the word tokenizer shared by every metric and
//! heuristic.
//!
//! Tokens are lowercased, split on whitespace, and then have leading and
//! trailing punctuation peeled off as separate tokens. English clitics are
//! split at the apostrophe (`don't` -> `don`, `'t`). Joining the tokens with
//! single spaces and tokenizing again reproduces the same sequence.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnicodeForm {
    #[default]
    Nfc,
    Nfkc,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub form: UnicodeForm,
    pub collapse_whitespace: bool,
    pub lowercase: bool,
}

impl Default for NormalizationPolicy {
    /// NFC, collapsed whitespace, case preserved.
    fn default() -> Self {
        Self {
            form: UnicodeForm::Nfc,
            collapse_whitespace: true,
            lowercase: false,
        }
    }
}

impl NormalizationPolicy {
    pub fn metric() -> Self {
        Self {
            lowercase: true,
            ..Self::default()
        }
    }
}

fn apply_form(text: &str, form: UnicodeForm) -> String {
    match form {
        UnicodeForm::Nfc => text.nfc().collect(),
        UnicodeForm::Nfkc => text.nfkc().collect(),
        UnicodeForm::None => text.to_owned(),
    }
}

pub fn normalize_text(raw: &str, policy: &NormalizationPolicy) -> String {
    let mut text = apply_form(raw, policy.form);
    if policy.lowercase {
        // Lowercasing can emit decomposed sequences (e.g. U+0130).
        text = apply_form(&text.to_lowercase(), policy.form);
    }
    if policy.collapse_whitespace {
        text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    text
}

const CLITICS: [&str; 7] = ["s", "t", "m", "d", "re", "ve", "ll"];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// `rest` is the text after an apostrophe.
fn is_clitic(rest: &str) -> bool {
    CLITICS.contains(&rest)
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lowered.split_whitespace() {
        split_chunk(chunk, &mut tokens);
    }
    tokens
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let mut end = chars.len();
    while end > 0 && is_punct(chars[end - 1].1) {
        end -= 1;
    }
    let byte_at = |i: usize| chars.get(i).map_or(chunk.len(), |&(b, _)| b);
    let core_end = byte_at(end);

    let mut start = 0;
    while start < end && is_punct(chars[start].1) {
        let c = chars[start].1;
        if is_apostrophe(c) && is_clitic(&chunk[byte_at(start + 1)..core_end]) {
            break;
        }
        out.push(c.to_string());
        start += 1;
    }

    if start < end {
        let core = &chunk[byte_at(start)..core_end];
        let mut clitics = Vec::new();
        let mut head = core;
        loop {
            let Some((pos, c)) = head.char_indices().rev().find(|&(_, c)| is_apostrophe(c)) else {
                break;
            };
            let before = head[..pos].chars().next_back();
            let rest = &head[pos + c.len_utf8()..];
            match before {
                Some(b) if b.is_alphanumeric() && is_clitic(rest) => {
                    clitics.push(&head[pos..]);
                    head = &head[..pos];
                }
                _ => break,
            }
        }
        out.push(head.to_owned());
        out.extend(clitics.into_iter().rev().map(str::to_owned));
    }

    for &(_, c) in &chars[end..] {
        out.push(c.to_string());
    }
}
