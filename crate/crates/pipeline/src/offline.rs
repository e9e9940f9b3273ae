//! A deterministic, rule-based stand-in for the language model.
//!
//! It answers every stage's contract from the request input alone, using
//! the script's lexicons, so the full pipeline runs offline and in tests.
//! Slides and narration reference numbers through placeholders. With
//! [`OfflineModel::fabricating_numbers`] it writes made-up literal numbers
//! instead, which imitates a model that ignores that instruction.

use std::sync::Arc;

use interviewer_core::llm::{CompletionRequest, LanguageModelClient, LlmError};
use interviewer_core::text::tokenize;
use interviewer_core::understanding::{classify_sentiment, detect_agreement, AgreementClass, SentimentClass};
use interviewer_core::InterviewScript;
use regex::Regex;
use serde_json::{json, Map, Value};

use crate::analysis::{rank_reasons, MAX_RANKED};
use crate::prompts::Stage;

const DISFLUENCIES: [&str; 6] = ["uh", "um", "erm", "uhm", "er", "hmm"];
const CONTRAST: [&str; 4] = ["but", "though", "although", "however"];
const MAX_THEME_SLIDES: usize = 11;

#[derive(Debug, Clone)]
pub struct OfflineModel {
    script: Arc<InterviewScript>,
    fabricate: bool,
}

impl OfflineModel {
    pub fn new(script: Arc<InterviewScript>) -> Self {
        Self {
            script,
            fabricate: false,
        }
    }

    /// Write literal, wrong numbers where placeholders belong.
    pub fn fabricating_numbers(mut self) -> Self {
        self.fabricate = true;
        self
    }

    fn answer(&self, stage: Stage, input: &Value) -> Value {
        match stage {
            Stage::Correct => correct(input),
            Stage::Summarize => self.summarize(input),
            Stage::Analyze => analyze(input),
            Stage::Slides => slides(input),
            Stage::Script => script(input),
        }
    }

    fn summarize(&self, input: &Value) -> Value {
        let mut themes = Map::new();
        for theme in input["themes"].as_array().into_iter().flatten() {
            let answers = answers(&theme["exchanges"]);
            let id = theme["id"].as_str().unwrap_or_default().to_string();
            if answers.is_empty() {
                themes.insert(id, json!({"stance": "unclear", "sentiment": "neutral", "motivation": ""}));
                continue;
            }
            let stance = answers
                .iter()
                .map(|a| detect_agreement(a, &self.script))
                .find(|c| *c != AgreementClass::Unclear)
                .unwrap_or(AgreementClass::Unclear);
            let joined = answers.join(" ");
            let motivation = answers
                .iter()
                .find_map(|a| self.reason_clause(a))
                .or_else(|| answers.iter().max_by_key(|a| a.len()).map(|a| sentence_case(a)))
                .unwrap_or_default();
            themes.insert(
                id,
                json!({
                    "stance": stance.as_str(),
                    "sentiment": classify_sentiment(&joined, &self.script).as_str(),
                    "motivation": motivation,
                }),
            );
        }
        let experience = answers(&input["experience"]["exchanges"]);
        let joined = experience.join(" ");
        let class = if experience.is_empty() {
            SentimentClass::Neutral
        } else {
            let words = tokenize(&joined);
            match classify_sentiment(&joined, &self.script) {
                SentimentClass::Positive if words.iter().any(|w| CONTRAST.contains(&w.as_str())) => {
                    SentimentClass::Neutral
                }
                other => other,
            }
        };
        let reason = experience
            .iter()
            .find_map(|a| self.reason_clause(a))
            .or_else(|| experience.first().map(|a| sentence_case(a)))
            .unwrap_or_default();
        json!({
            "session_id": input["session_id"],
            "themes": themes,
            "overall_experience": {"class": class.as_str(), "reason": reason},
        })
    }

    /// The words after the first reason keyword, up to the end of that
    /// sentence.
    fn reason_clause(&self, answer: &str) -> Option<String> {
        let reasons = &self.script.lexicons().reason;
        let words: Vec<&str> = answer.split_whitespace().collect();
        let start = words.iter().enumerate().position(|(i, w)| {
            let token = tokenize(w);
            let next = words.get(i + 1).map(|n| tokenize(n)).unwrap_or_default();
            reasons.any_in(&token) && !(token == ["as"] && next.first().is_some_and(|n| n == "well"))
        })?;
        let mut clause = Vec::new();
        for w in &words[start + 1..] {
            clause.push(*w);
            if w.ends_with(['.', '!', '?']) {
                break;
            }
        }
        let text = clause.join(" ");
        let text = text.trim_end_matches(['.', '!', '?', ',']).trim();
        (!text.is_empty()).then(|| sentence_case(text))
    }
}

impl LanguageModelClient for OfflineModel {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError> {
        let stage = Stage::ALL
            .into_iter()
            .find(|s| s.name() == request.stage)
            .ok_or_else(|| LlmError::BadResponse(format!("unknown stage {}", request.stage)))?;
        let input: Value = serde_json::from_str(request.input)
            .map_err(|e| LlmError::BadResponse(format!("input is not JSON: {e}")))?;
        let mut out = serde_json::to_string(&self.answer(stage, &input)).unwrap();
        if self.fabricate {
            out = fabricate_numbers(&out);
        }
        Ok(out)
    }
}

fn answers(exchanges: &Value) -> Vec<String> {
    exchanges
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|e| e["answer"].as_str())
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(str::to_string)
        .collect()
}

fn sentence_case(text: &str) -> String {
    let text = text.trim().trim_end_matches(['.', '!', '?']);
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn clean_turn(text: &str) -> String {
    let words: Vec<String> = text
        .split_whitespace()
        .filter(|w| {
            let bare = w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
            !DISFLUENCIES.contains(&bare.as_str())
        })
        .map(|w| match w.strip_prefix('i') {
            Some(rest) if rest.is_empty() || rest.starts_with('\'') => format!("I{rest}"),
            _ => w.to_string(),
        })
        .collect();
    let mut out = sentence_case(&words.join(" "));
    if out.is_empty() {
        return text.trim().to_string();
    }
    let ended = text.trim_end().ends_with(['.', '!', '?']);
    out.push(if ended { text.trim_end().chars().last().unwrap() } else { '.' });
    out
}

fn correct(input: &Value) -> Value {
    let turns: Vec<Value> = input["turns"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|t| json!({"index": t["index"], "text": clean_turn(t["text"].as_str().unwrap_or_default())}))
        .collect();
    json!({ "turns": turns })
}

fn ranked(values: &Value) -> Vec<String> {
    let items: Vec<&str> = values.as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    rank_reasons(items).into_iter().take(MAX_RANKED).collect()
}

fn analyze(input: &Value) -> Value {
    let mut top = Map::new();
    for class in SentimentClass::ALL {
        top.insert(class.as_str().into(), json!(ranked(&input["experience"][class.as_str()]["reasons"])));
    }
    let mut clusters = Map::new();
    for theme in input["themes"].as_array().into_iter().flatten() {
        let id = theme["id"].as_str().unwrap_or_default();
        clusters.insert(id.into(), json!(ranked(&theme["motivations"])));
    }
    let findings: Vec<Value> = input["queries"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|q| {
            json!({
                "query": q,
                "finding": "The coded answers bear on this question; see the theme summaries and their motivation clusters.",
            })
        })
        .collect();
    json!({"top_reasons": top, "motivation_clusters": clusters, "findings": findings})
}

fn theme_list(report: &Value) -> Vec<&Value> {
    report["per_theme"].as_array().into_iter().flatten().take(MAX_THEME_SLIDES).collect()
}

fn slides(input: &Value) -> Value {
    let report = &input["report"];
    let title = input["meta"]["event_name"].as_str().unwrap_or("Interview results");
    let themes = theme_list(report);
    let mut slides = vec![
        json!({"kind": "title", "title": title, "bullets": ["What {{n_sessions}} participants told the robot interviewer"]}),
        json!({"kind": "content", "title": "Overview", "bullets": [
            "The robot interviewed {{n_sessions}} participants",
            format!("Themes: {}", themes.iter().filter_map(|t| t["label"].as_str()).collect::<Vec<_>>().join(", ")),
        ]}),
    ];
    let mut bullets = Vec::new();
    for class in SentimentClass::ALL {
        let key = class.as_str();
        bullets.push(format!("{}: {{{{experience.{key}}}}}", sentence_case(key)));
    }
    if let Some(reason) = report["top_reasons"]["positive"].get(0).and_then(Value::as_str) {
        bullets.push(format!("Most common positive reason: {reason}"));
    }
    slides.push(json!({
        "kind": "content",
        "title": "Overall interview experience",
        "bullets": bullets,
        "table": {"source": "experience", "rows": [{"label": "Positive"}, {"label": "Neutral"}, {"label": "Negative"}]},
    }));
    for theme in themes {
        let id = theme["theme_id"].as_str().unwrap_or_default();
        let mut bullets = vec![
            format!("Agree: {{{{theme.{id}.agree}}}}"),
            format!("Disagree: {{{{theme.{id}.disagree}}}}"),
        ];
        bullets.extend(
            theme["motivation_clusters"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(Value::as_str)
                .take(2)
                .map(str::to_string),
        );
        slides.push(json!({
            "kind": "content",
            "title": theme["label"],
            "bullets": bullets,
            "table": {"source": format!("theme:{id}"), "rows": [{"label": "Agree"}, {"label": "Disagree"}, {"label": "Unclear"}]},
        }));
    }
    slides.push(json!({"kind": "content", "title": "Thank you", "bullets": ["Questions and discussion"]}));
    json!({ "slides": slides })
}

fn script(input: &Value) -> Value {
    let report = &input["report"];
    let segments: Vec<String> = input["slides"]
        .as_array()
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(i, slide)| {
            let title = slide["title"].as_str().unwrap_or_default();
            let source = slide["table"]["source"].as_str();
            match source {
                _ if i == 0 => {
                    "Welcome, everyone. Today we share what {{n_sessions}} participants told our robot interviewer."
                        .to_string()
                }
                Some("experience") => {
                    let mut text = "Looking at the overall interview experience, {{experience.positive}} of participants were positive, {{experience.neutral}} were neutral and {{experience.negative}} were negative.".to_string();
                    if let Some(r) = report["top_reasons"]["positive"].get(0).and_then(Value::as_str) {
                        text.push_str(&format!(" The most common positive reason was: {}.", r.trim_end_matches('.')));
                    }
                    text
                }
                Some(source) => {
                    let id = source.trim_start_matches("theme:");
                    format!(
                        "On {}, {{{{theme.{id}.agree}}}} agreed, {{{{theme.{id}.disagree}}}} disagreed and {{{{theme.{id}.unclear}}}} gave no clear answer.",
                        title.to_lowercase()
                    )
                }
                None => {
                    let bullets: Vec<String> = slide["bullets"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter_map(Value::as_str)
                        .map(|b| format!("{}.", b.trim_end_matches('.')))
                        .collect();
                    format!("{}. {}", title.trim_end_matches('.'), bullets.join(" ")).trim().to_string()
                }
            }
        })
        .collect();
    json!({ "segments": segments })
}

/// Replace every placeholder with a plausible but wrong literal.
fn fabricate_numbers(text: &str) -> String {
    let re = Regex::new(r"\{\{\s*([A-Za-z0-9_.\-]+)\s*\}\}").unwrap();
    re.replace_all(text, |c: &regex::Captures| {
        if &c[1] == "n_sessions" {
            "40".to_string()
        } else {
            "50%".to_string()
        }
    })
    .into_owned()
}
