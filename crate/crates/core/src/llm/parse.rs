//! Critic and refiner response parsing. Total on arbitrary input.

use serde_json::Value;
use thiserror::Error;

use crate::critic::CritiqueRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no fenced JSON block")]
    NoJsonBlock,
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("score {0} outside 0..=10")]
    ScoreOutOfRange(f64),
}

/// Body of the first ``` fenced block, with an optional `json` language tag
/// (also accepted as "``` json").
pub fn first_fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")? + 3;
    let rest = &text[start..];
    let end = rest.find("```")?;
    let body = rest[..end].trim_start();
    let body = body
        .strip_prefix("json")
        .or_else(|| body.strip_prefix("JSON"))
        .unwrap_or(body);
    Some(body.trim())
}

fn text_field(obj: &serde_json::Map<String, Value>, keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| match obj.get(*k)? {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => Some(
            items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join("; "),
        ),
        other => Some(other.to_string()),
    })
}

fn score_of(v: &Value) -> Result<f64, ParseError> {
    let raw = match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| ParseError::MalformedJson("score is not finite".into()))?,
        Value::String(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| ParseError::MalformedJson(format!("score {s:?} is not numeric")))?,
        other => return Err(ParseError::MalformedJson(format!("score has type {other}"))),
    };
    if !raw.is_finite() {
        return Err(ParseError::ScoreOutOfRange(raw));
    }
    Ok(raw.round())
}

/// Extracts the first fenced JSON block and reads `score`, `critique` and the
/// optional suggestion fields. Non-integer scores are rounded.
pub fn parse_critic_response(text: &str) -> Result<CritiqueRecord, ParseError> {
    let block = first_fenced_block(text).ok_or(ParseError::NoJsonBlock)?;
    let value: Value = serde_json::from_str(block).map_err(|e| ParseError::MalformedJson(e.to_string()))?;
    let obj = match value {
        Value::Object(o) => o,
        Value::Array(mut items) if matches!(items.first(), Some(Value::Object(_))) => match items.swap_remove(0) {
            Value::Object(o) => o,
            _ => unreachable!("checked above"),
        },
        other => return Err(ParseError::MalformedJson(format!("expected an object, got {other}"))),
    };
    let score = score_of(obj.get("score").ok_or_else(|| ParseError::MalformedJson("missing score".into()))?)?;
    if !(0.0..=10.0).contains(&score) {
        return Err(ParseError::ScoreOutOfRange(score));
    }
    Ok(CritiqueRecord {
        score: score as u8,
        critique: text_field(&obj, &["critique"]).unwrap_or_default(),
        suggestion_action: text_field(&obj, &["suggestion_action", "suggestion_search_keywords"]),
        suggestion_reasoning: text_field(&obj, &["suggestion_thought", "suggestion_search_reasoning"]),
    })
}

/// Contents of the last `<action>…</action>` tag, trimmed.
pub fn parse_action_tag(text: &str) -> Option<&str> {
    let start = text.rfind("<action>")? + "<action>".len();
    let end = text[start..].find("</action>")? + start;
    Some(text[start..end].trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_record() {
        let r = parse_critic_response("sure\n```json\n{\"score\": 7, \"critique\": \"ok\"}\n```").unwrap();
        assert_eq!(r.score, 7);
        assert_eq!(r.critique, "ok");
        assert_eq!(r.suggestion_action, None);
    }

    #[test]
    fn spaced_language_tag_and_rounding() {
        let r = parse_critic_response("``` json\n{\"score\": 6.5, \"critique\": \"x\", \"suggestion_search_keywords\": [\"a b\", \"c\"]}\n```").unwrap();
        assert_eq!(r.score, 7);
        assert_eq!(r.suggestion_action.as_deref(), Some("a b; c"));
    }

    #[test]
    fn errors() {
        assert_eq!(parse_critic_response("no fence here"), Err(ParseError::NoJsonBlock));
        assert_eq!(parse_critic_response("```json {\"score\": 11} ```"), Err(ParseError::ScoreOutOfRange(11.0)));
        assert!(matches!(parse_critic_response("```{score: 1}```"), Err(ParseError::MalformedJson(_))));
        assert_eq!(parse_critic_response("```json\n{\"score\": -0.4}\n```").unwrap().score, 0);
        assert_eq!(parse_critic_response("```json\n{\"score\": \"9\"}\n```").unwrap().score, 9);
    }

    #[test]
    fn action_tags() {
        assert_eq!(parse_action_tag("<think>x</think><action> go to b </action>"), Some("go to b"));
        assert_eq!(parse_action_tag("<action>unterminated"), None);
    }
}
