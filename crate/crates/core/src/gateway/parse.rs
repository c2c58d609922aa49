use serde_json::{Map, Value};
use thiserror::Error;

use crate::agents::AgentDecision;
use crate::engine::Action;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("NoJsonFound: the response contains no JSON object")]
    NoJsonFound,
    #[error("MissingField: required key \"{0}\" is absent")]
    MissingField(String),
    #[error("MalformedField: key \"{field}\" {detail}")]
    MalformedField { field: String, detail: String },
    #[error("WrongArity({0}): expected a different number of team indices")]
    WrongArity(usize),
    #[error("IndexOutOfRange({0})")]
    IndexOutOfRange(i64),
    #[error("DuplicateIndex({0})")]
    DuplicateIndex(usize),
    #[error("UnknownActionType: \"{0}\" is neither \"attack\" nor \"switch\"")]
    UnknownActionType(String),
    #[error("IllegalAction: {0}")]
    IllegalAction(String),
}

/// Byte range of the balanced `{...}` starting at `start`, honouring string literals.
fn balanced_object(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Escapes raw control characters that appear inside string literals.
fn escape_controls_in_strings(candidate: &str) -> String {
    let mut out = String::with_capacity(candidate.len());
    let mut in_string = false;
    let mut escaped = false;
    for c in candidate.chars() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            } else if c.is_control() {
                match c {
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    other => out.push_str(&format!("\\u{:04x}", other as u32)),
                }
                continue;
            }
        } else if c == '"' {
            in_string = true;
        }
        out.push(c);
    }
    out
}

fn parse_object(candidate: &str) -> Option<Map<String, Value>> {
    let parsed = serde_json::from_str::<Value>(candidate)
        .ok()
        .or_else(|| serde_json::from_str::<Value>(&escape_controls_in_strings(candidate)).ok());
    match parsed {
        Some(Value::Object(map)) => Some(map),
        _ => None,
    }
}

/// The first well-formed JSON object embedded in `raw`.
///
/// Prose and markdown fences around the object are ignored. Raw newlines inside
/// string values are tolerated.
pub fn extract_json_object(raw: &str) -> Option<Map<String, Value>> {
    let mut from = 0;
    while let Some(offset) = raw[from..].find('{') {
        let start = from + offset;
        if let Some(end) = balanced_object(raw, start) {
            if let Some(map) = parse_object(&raw[start..end]) {
                return Some(map);
            }
        }
        from = start + 1;
    }
    None
}

fn reasoning_of(obj: &Map<String, Value>) -> String {
    match obj.get("reasoning") {
        Some(Value::String(s)) => s.clone(),
        _ => String::new(),
    }
}

fn malformed(field: &str, detail: impl Into<String>) -> ParseError {
    ParseError::MalformedField {
        field: field.to_string(),
        detail: detail.into(),
    }
}

fn integer_field(value: &Value, field: &str) -> Result<i64, ParseError> {
    if let Some(i) = value.as_i64() {
        return Ok(i);
    }
    match value.as_f64() {
        Some(f) if f.fract() == 0.0 && f.abs() < 1e15 => Ok(f as i64),
        _ => Err(malformed(field, format!("must be an integer, got {value}"))),
    }
}

pub fn parse_team_response(
    raw: &str,
    pool_size: usize,
    team_size: usize,
) -> Result<AgentDecision, ParseError> {
    let obj = extract_json_object(raw).ok_or(ParseError::NoJsonFound)?;
    let team = obj
        .get("team")
        .ok_or_else(|| ParseError::MissingField("team".into()))?;
    let entries = team
        .as_array()
        .ok_or_else(|| malformed("team", "must be a list of integers"))?;
    if entries.len() != team_size {
        return Err(ParseError::WrongArity(entries.len()));
    }
    let mut indices = Vec::with_capacity(team_size);
    for entry in entries {
        let i = integer_field(entry, "team")?;
        if i < 0 || i as u64 >= pool_size as u64 {
            return Err(ParseError::IndexOutOfRange(i));
        }
        let i = i as usize;
        if indices.contains(&i) {
            return Err(ParseError::DuplicateIndex(i));
        }
        indices.push(i);
    }
    Ok(AgentDecision::team(indices, reasoning_of(&obj)))
}

fn index_field(action: &Map<String, Value>, field: &str) -> Result<u8, ParseError> {
    let value = action
        .get(field)
        .ok_or_else(|| ParseError::MissingField(field.into()))?;
    let i = integer_field(value, field)?;
    u8::try_from(i).map_err(|_| ParseError::IndexOutOfRange(i))
}

pub fn parse_action_response(raw: &str, legal: &[Action]) -> Result<AgentDecision, ParseError> {
    let obj = extract_json_object(raw).ok_or(ParseError::NoJsonFound)?;
    let action = obj
        .get("action")
        .ok_or_else(|| ParseError::MissingField("action".into()))?
        .as_object()
        .ok_or_else(|| malformed("action", "must be an object"))?;
    let kind = action
        .get("type")
        .ok_or_else(|| ParseError::MissingField("type".into()))?
        .as_str()
        .ok_or_else(|| malformed("type", "must be a string"))?;
    let parsed = match kind.trim() {
        "attack" => Action::Attack {
            move_index: index_field(action, "move_index")?,
        },
        "switch" => Action::Switch {
            team_index: index_field(action, "team_index")?,
        },
        other => return Err(ParseError::UnknownActionType(other.to_string())),
    };
    if !legal.contains(&parsed) {
        let options: Vec<String> = legal.iter().map(ToString::to_string).collect();
        return Err(ParseError::IllegalAction(format!(
            "{parsed} is not legal; legal actions are [{}]",
            options.join(", ")
        )));
    }
    Ok(AgentDecision::action(parsed, reasoning_of(&obj)))
}
