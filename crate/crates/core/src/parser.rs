//! Parsing of raw completions in the `<think>...</think><answer>...</answer>`
//! format, and the inverse renderer used to build fixtures.
//!
//! A completion is compliant when, ignoring surrounding whitespace, it is
//! exactly one think block followed by exactly one answer block, and the
//! answer body is a JSON object `{"verdict", "method", "text", "bbox"}`
//! whose fields obey the record presence rules. Parsing never fails: every
//! violation becomes a diagnostic and best-effort fields are still filled
//! from the first tag pair found.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::model::{BBox, ForgeryMethod, ImageVerdict, PredictionRecord};

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

/// Answer fields recovered from a completion. Any of them may be missing
/// when the completion is malformed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnswerPayload {
    pub verdict: Option<ImageVerdict>,
    pub method: Option<ForgeryMethod>,
    pub text: Option<String>,
    pub bbox: Option<BBox>,
}

impl From<&PredictionRecord> for AnswerPayload {
    fn from(p: &PredictionRecord) -> Self {
        Self {
            verdict: Some(p.verdict),
            method: p.method,
            text: p.text.clone(),
            bbox: p.bbox,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParsedOutput {
    /// Reasoning text with render escapes undone.
    pub think: String,
    pub answer_raw: String,
    pub answer: AnswerPayload,
    /// Tag grammar satisfied.
    pub tags_ok: bool,
    /// Answer body is a well-formed payload.
    pub payload_ok: bool,
    /// `tags_ok && payload_ok`.
    pub format_ok: bool,
    pub diagnostics: Vec<String>,
}

impl ParsedOutput {
    /// Builds a prediction record when the answer payload is complete.
    pub fn to_prediction(&self, id: &str, raw: Option<&str>) -> Option<PredictionRecord> {
        if !self.payload_ok {
            return None;
        }
        let verdict = self.answer.verdict?;
        Some(PredictionRecord {
            id: id.to_owned(),
            verdict,
            method: self.answer.method,
            text: self.answer.text.clone(),
            bbox: self.answer.bbox,
            reasoning: self.think.clone(),
            raw_output: raw.map(str::to_owned),
            extra: Map::new(),
        })
    }
}

/// Byte span of the content between an opening tag and the first matching
/// close after it (or end of input).
fn block(raw: &str, open: &str, close: &str) -> Option<(usize, Option<usize>)> {
    let start = raw.find(open)? + open.len();
    let end = raw[start..].find(close).map(|e| start + e);
    Some((start, end))
}

pub fn parse_completion(raw: &str) -> ParsedOutput {
    let mut out = ParsedOutput::default();
    let diag = &mut out.diagnostics;

    let mut tags_ok = true;
    let mut positions = [0usize; 4];
    for (slot, tag) in [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE]
        .into_iter()
        .enumerate()
    {
        let found: Vec<usize> = raw.match_indices(tag).map(|(i, _)| i).collect();
        match found.len() {
            0 => {
                tags_ok = false;
                diag.push(format!("missing {tag}"));
            }
            1 => positions[slot] = found[0],
            n => {
                tags_ok = false;
                diag.push(format!("{tag} appears {n} times"));
            }
        }
    }
    if tags_ok {
        let [t_open, t_close, a_open, a_close] = positions;
        if !(t_open < t_close && t_close < a_open && a_open < a_close) {
            tags_ok = false;
            diag.push("tags out of order or nested".into());
        } else {
            if !raw[..t_open].trim().is_empty() {
                tags_ok = false;
                diag.push("text before <think>".into());
            }
            if !raw[t_close + THINK_CLOSE.len()..a_open].trim().is_empty() {
                tags_ok = false;
                diag.push("text between </think> and <answer>".into());
            }
            if !raw[a_close + ANSWER_CLOSE.len()..].trim().is_empty() {
                tags_ok = false;
                diag.push("text after </answer>".into());
            }
        }
    }
    out.tags_ok = tags_ok;

    if let Some((start, end)) = block(raw, THINK_OPEN, THINK_CLOSE) {
        out.think = unescape(&raw[start..end.unwrap_or(raw.len())]);
    }
    match block(raw, ANSWER_OPEN, ANSWER_CLOSE) {
        Some((start, end)) => {
            out.answer_raw = raw[start..end.unwrap_or(raw.len())].to_owned();
            let (answer, problems) = parse_payload(&out.answer_raw);
            out.answer = answer;
            out.payload_ok = problems.is_empty();
            out.diagnostics.extend(problems);
        }
        None => out.payload_ok = false,
    }
    out.format_ok = out.tags_ok && out.payload_ok;
    out
}

/// Extracts whatever answer fields are valid, plus every violation.
fn parse_payload(body: &str) -> (AnswerPayload, Vec<String>) {
    let mut answer = AnswerPayload::default();
    let mut problems = Vec::new();
    let value: Value = match serde_json::from_str(body.trim()) {
        Ok(v) => v,
        Err(e) => {
            problems.push(format!("answer is not valid JSON: {e}"));
            return (answer, problems);
        }
    };
    let Some(obj) = value.as_object() else {
        problems.push("answer is not a JSON object".into());
        return (answer, problems);
    };
    let present = |k: &str| obj.get(k).filter(|v| !v.is_null());

    match present("verdict") {
        Some(Value::String(s)) => {
            answer.verdict = ImageVerdict::parse(s);
            if answer.verdict.is_none() {
                problems.push(format!("unknown verdict {s:?}"));
            }
        }
        Some(_) => problems.push("verdict is not a string".into()),
        None => problems.push("missing verdict".into()),
    }
    match present("method") {
        Some(Value::String(s)) => {
            answer.method = ForgeryMethod::parse(s);
            if answer.method.is_none() {
                problems.push(format!("unknown method {s:?}"));
            }
        }
        Some(_) => problems.push("method is not a string".into()),
        None => {}
    }
    match present("text") {
        Some(Value::String(s)) => answer.text = Some(s.clone()),
        Some(_) => problems.push("text is not a string".into()),
        None => {}
    }
    if let Some(b) = present("bbox") {
        match BBox::from_json(b) {
            Ok(b) => answer.bbox = Some(b),
            Err(e) => problems.push(format!("bad bbox: {e}")),
        }
    }

    match answer.verdict {
        Some(ImageVerdict::Tampered) => {
            for (field, has) in [
                ("method", present("method").is_some()),
                ("text", present("text").is_some()),
                ("bbox", present("bbox").is_some()),
            ] {
                if !has {
                    problems.push(format!("tampered answer lacks {field}"));
                }
            }
        }
        Some(v) => {
            for field in ["method", "text", "bbox"] {
                if present(field).is_some() {
                    problems.push(format!("{field} must be null for a {v} answer"));
                }
            }
        }
        None => {}
    }
    (answer, problems)
}

/// Renders a record as a canonical compliant completion.
///
/// Reasoning is escaped (`&`, `<`, `>` as entities) and the answer JSON
/// escapes angle brackets as `<` / `>`, so literal tag strings
/// anywhere in the record cannot break the tag grammar.
pub fn render_completion(p: &PredictionRecord) -> String {
    let answer = AnswerPayload::from(p);
    let body = serde_json::to_string(&answer)
        .expect("answer payload serializes")
        .replace('<', "\\u003c")
        .replace('>', "\\u003e");
    format!(
        "{THINK_OPEN}{}{THINK_CLOSE}{ANSWER_OPEN}{body}{ANSWER_CLOSE}",
        escape(&p.reasoning)
    )
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    if !s.contains('&') {
        return s.to_owned();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let (rep, len) = if rest.starts_with("&lt;") {
            ('<', 4)
        } else if rest.starts_with("&gt;") {
            ('>', 4)
        } else if rest.starts_with("&amp;") {
            ('&', 5)
        } else {
            ('&', 1)
        };
        out.push(rep);
        rest = &rest[len..];
    }
    out.push_str(rest);
    out
}
