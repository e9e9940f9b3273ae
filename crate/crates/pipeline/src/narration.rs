//! Stage 5: one narration segment per slide.

use interviewer_core::llm::LanguageModelClient;
use interviewer_core::text::word_count;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::AnalysisReport;
use crate::client::{ask_validated, Ask};
use crate::numbers::{ensure_shares, inject, NumberTable};
use crate::prompts::Stage;
use crate::slides::SlideDeckSpec;
use crate::{StageFailure, StageSettings};

pub const DEFAULT_WORD_BUDGET: usize = 120;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationScript {
    pub segments: Vec<String>,
}

fn parse_segments(value: &Value, expected: usize) -> Result<Vec<String>, String> {
    let items = value
        .get("segments")
        .and_then(Value::as_array)
        .ok_or("segments: expected an array of strings")?;
    if items.len() != expected {
        return Err(format!("segments: expected {expected} entries, one per slide, got {}", items.len()));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.as_str()
                .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
                .ok_or_else(|| format!("segments[{i}]: expected a string"))
        })
        .collect()
}

/// Keep whole sentences while they fit in `budget` words; a first sentence
/// that alone is too long is cut at the budget.
fn truncate_words(text: &str, budget: usize) -> String {
    if word_count(text) <= budget {
        return text.to_string();
    }
    let mut kept = String::new();
    let mut used = 0;
    for sentence in text.split_inclusive(['.', '!', '?']) {
        let n = word_count(sentence);
        if used + n > budget {
            break;
        }
        kept.push_str(sentence);
        used += n;
    }
    if kept.trim().is_empty() {
        let mut cut = text.split_whitespace().take(budget).collect::<Vec<_>>().join(" ");
        cut = cut.trim_end_matches([',', ';', ':']).to_string();
        cut.push('.');
        return cut;
    }
    kept.trim().to_string()
}

/// Narrate `spec` slide by slide. Numbers are filled from `report`, each
/// segment stays within `word_budget` words, and a segment for a slide
/// with a table states all of the table's values.
pub fn generate_presentation_script(
    report: &AnalysisReport,
    spec: &SlideDeckSpec,
    word_budget: usize,
    client: &dyn LanguageModelClient,
    settings: &StageSettings,
) -> Result<PresentationScript, StageFailure> {
    let input = serde_json::to_string_pretty(&json!({
        "word_budget": word_budget,
        "report": report,
        "slides": spec.slides,
    }))
    .unwrap();
    let drafts = ask_validated(
        client,
        settings.retry,
        &Ask {
            stage: Stage::Script,
            prompt: settings.prompts.get(Stage::Script),
            input: &input,
            temperature: settings.creative_temperature,
        },
        |v| parse_segments(v, spec.slides.len()),
    )?;

    let table = NumberTable::from_report(report);
    let segments = spec
        .slides
        .iter()
        .zip(drafts)
        .map(|(slide, draft)| {
            let rows: Vec<(String, String)> = slide
                .table
                .iter()
                .flat_map(|t| &t.rows)
                .map(|r| (r.label.clone(), r.value.to_string()))
                .collect();
            let mut text = inject(&draft, &table, slide.scope());
            if text.is_empty() {
                text = format!("{}.", slide.title.trim_end_matches(['.', '!', '?']));
            }
            let reserve = if rows.is_empty() {
                0
            } else {
                word_count(&ensure_shares("", &rows))
            };
            let text = truncate_words(&text, word_budget.saturating_sub(reserve).max(1));
            ensure_shares(&text, &rows)
        })
        .collect();
    Ok(PresentationScript { segments })
}

/// Plain-text narration, one block per slide.
pub fn render_narration(spec: &SlideDeckSpec, script: &PresentationScript) -> String {
    let mut out = String::new();
    for (i, (slide, text)) in spec.slides.iter().zip(&script.segments).enumerate() {
        out.push_str(&format!("[Slide {}] {}\n{}\n\n", i + 1, slide.title, text));
    }
    out
}
