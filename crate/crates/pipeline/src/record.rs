//! Per-session structured summaries and their validation.

use std::collections::BTreeMap;

use interviewer_core::understanding::{AgreementClass, SentimentClass};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemeAnswer {
    pub stance: AgreementClass,
    pub sentiment: SentimentClass,
    pub motivation: String,
}

impl ThemeAnswer {
    pub fn unclear() -> Self {
        Self {
            stance: AgreementClass::Unclear,
            sentiment: SentimentClass::Neutral,
            motivation: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperienceRating {
    pub class: SentimentClass,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredRecord {
    pub session_id: String,
    pub themes: BTreeMap<String, ThemeAnswer>,
    pub overall_experience: ExperienceRating,
}

impl StructuredRecord {
    /// The record for a session with nothing to summarize.
    pub fn vacuous(session_id: &str, theme_ids: &[String]) -> Self {
        Self {
            session_id: session_id.to_string(),
            themes: theme_ids.iter().map(|id| (id.clone(), ThemeAnswer::unclear())).collect(),
            overall_experience: ExperienceRating {
                class: SentimentClass::Neutral,
                reason: String::new(),
            },
        }
    }
}

fn closed<T: Copy>(value: &Value, field: &str, options: &[(&str, T)]) -> Result<T, String> {
    let allowed = || options.iter().map(|(s, _)| *s).collect::<Vec<_>>().join(", ");
    let Some(text) = value.as_str() else {
        return Err(format!("{field}: expected one of {}, got {value}", allowed()));
    };
    options
        .iter()
        .find(|(s, _)| s.eq_ignore_ascii_case(text.trim()))
        .map(|(_, v)| *v)
        .ok_or_else(|| format!("{field}: expected one of {}, got {text:?}", allowed()))
}

fn stance(value: &Value, field: &str) -> Result<AgreementClass, String> {
    let options = AgreementClass::ALL.map(|c| (c.as_str(), c));
    closed(value, field, &options)
}

fn sentiment(value: &Value, field: &str) -> Result<SentimentClass, String> {
    let options = SentimentClass::ALL.map(|c| (c.as_str(), c));
    closed(value, field, &options)
}

fn text(value: &Value, field: &str) -> Result<String, String> {
    match value {
        Value::Null => Ok(String::new()),
        Value::String(s) => Ok(s.trim().to_string()),
        other => Err(format!("{field}: expected a string, got {other}")),
    }
}

/// Validate model output as the record for `session_id`. Every theme in
/// `theme_ids` must appear exactly once; errors name the offending field.
pub fn parse_record(value: &Value, session_id: &str, theme_ids: &[String]) -> Result<StructuredRecord, String> {
    let themes_value = value
        .get("themes")
        .and_then(Value::as_object)
        .ok_or("themes: expected an object keyed by theme id")?;
    for key in themes_value.keys() {
        if !theme_ids.contains(key) {
            return Err(format!("themes.{key}: not a theme of this script"));
        }
    }
    let mut themes = BTreeMap::new();
    for id in theme_ids {
        let entry = themes_value
            .get(id)
            .ok_or_else(|| format!("themes.{id}: missing"))?;
        let field = |name: &str| format!("themes.{id}.{name}");
        themes.insert(
            id.clone(),
            ThemeAnswer {
                stance: stance(&entry["stance"], &field("stance"))?,
                sentiment: sentiment(&entry["sentiment"], &field("sentiment"))?,
                motivation: text(&entry["motivation"], &field("motivation"))?,
            },
        );
    }
    let experience = value
        .get("overall_experience")
        .filter(|v| v.is_object())
        .ok_or("overall_experience: expected an object")?;
    Ok(StructuredRecord {
        // the orchestrator knows which session this is; never trust the echo
        session_id: session_id.to_string(),
        themes,
        overall_experience: ExperienceRating {
            class: sentiment(&experience["class"], "overall_experience.class")?,
            reason: text(&experience["reason"], "overall_experience.reason")?,
        },
    })
}
