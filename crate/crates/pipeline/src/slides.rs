//! Stage 4: slide content, and the deck file it renders to.
//!
//! Decks are written as Marp-flavoured Markdown: a front-matter block, then
//! one section per slide separated by `---` lines. Rendering is a pure
//! function of the spec and [`parse_deck`] reads it back.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use interviewer_core::llm::LanguageModelClient;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{AnalysisReport, Percentage, Share};
use crate::client::{ask_validated, Ask};
use crate::numbers::{inject, NumberTable, Scope};
use crate::prompts::Stage;
use crate::{StageFailure, StageSettings};

pub const DEFAULT_SLIDE_BOUNDS: RangeInclusive<usize> = 3..=15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideKind {
    Title,
    Content,
}

/// Where a table's values come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TableSource {
    Experience,
    Theme(String),
}

impl fmt::Display for TableSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableSource::Experience => f.write_str("experience"),
            TableSource::Theme(id) => write!(f, "theme:{id}"),
        }
    }
}

impl FromStr for TableSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "experience" => Ok(TableSource::Experience),
            other => match other.strip_prefix("theme:") {
                Some(id) if !id.is_empty() => Ok(TableSource::Theme(id.to_string())),
                _ => Err(format!("unknown table source {other:?}")),
            },
        }
    }
}

impl TryFrom<String> for TableSource {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TableSource> for String {
    fn from(s: TableSource) -> Self {
        s.to_string()
    }
}

impl TableSource {
    fn scope(&self) -> Scope<'_> {
        match self {
            TableSource::Experience => Scope::Experience,
            TableSource::Theme(id) => Scope::Theme(id),
        }
    }

    fn shares<'r>(&self, report: &'r AnalysisReport) -> Option<&'r [Share]> {
        match self {
            TableSource::Experience => Some(&report.distribution),
            TableSource::Theme(id) => report.theme(id).map(|t| t.stance.as_slice()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub value: Percentage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlideTable {
    pub source: TableSource,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slide {
    pub kind: SlideKind,
    pub title: String,
    pub bullets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<SlideTable>,
}

impl Slide {
    pub fn scope(&self) -> Scope<'_> {
        self.table.as_ref().map_or(Scope::Unscoped, |t| t.source.scope())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckMeta {
    pub event_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

impl Default for DeckMeta {
    fn default() -> Self {
        Self {
            event_name: "Interview results".into(),
            date: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlideDeckSpec {
    pub meta: DeckMeta,
    pub slides: Vec<Slide>,
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rows for `source` with report values, in the model's order where its
/// labels match a category; categories it left out are appended.
fn table_rows(source: &TableSource, requested: &[String], report: &AnalysisReport) -> Vec<TableRow> {
    let shares = source.shares(report).unwrap_or_default();
    let mut order: Vec<&Share> = Vec::new();
    for label in requested {
        let hit = shares.iter().find(|s| {
            s.category.eq_ignore_ascii_case(label.trim()) || s.label.eq_ignore_ascii_case(label.trim())
        });
        if let Some(share) = hit {
            if !order.iter().any(|s| s.category == share.category) {
                order.push(share);
            }
        }
    }
    for share in shares {
        if !order.iter().any(|s| s.category == share.category) {
            order.push(share);
        }
    }
    order
        .into_iter()
        .map(|s| TableRow {
            label: s.label.clone(),
            value: s.percentage,
        })
        .collect()
}

fn title_slide(meta: &DeckMeta) -> Slide {
    Slide {
        kind: SlideKind::Title,
        title: meta.event_name.clone(),
        bullets: meta.date.iter().cloned().collect(),
        table: None,
    }
}

fn experience_slide(report: &AnalysisReport) -> Slide {
    Slide {
        kind: SlideKind::Content,
        title: "Overall interview experience".into(),
        bullets: Vec::new(),
        table: Some(SlideTable {
            source: TableSource::Experience,
            rows: table_rows(&TableSource::Experience, &[], report),
        }),
    }
}

fn parse_slides(
    value: &Value,
    report: &AnalysisReport,
    meta: &DeckMeta,
    bounds: &RangeInclusive<usize>,
) -> Result<SlideDeckSpec, String> {
    let items = value
        .get("slides")
        .and_then(Value::as_array)
        .ok_or("slides: expected an array")?;
    if !bounds.contains(&items.len()) {
        return Err(format!(
            "slides: expected between {} and {} slides, got {}",
            bounds.start(),
            bounds.end(),
            items.len()
        ));
    }
    let table = NumberTable::from_report(report);
    let mut slides = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let field = |name: &str| format!("slides[{i}].{name}");
        let kind = match item.get("kind").and_then(Value::as_str) {
            None | Some("content") => SlideKind::Content,
            Some("title") => SlideKind::Title,
            Some(other) => return Err(format!("{}: unknown kind {other:?}", field("kind"))),
        };
        let title = item
            .get("title")
            .and_then(Value::as_str)
            .map(one_line)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| format!("{}: expected a non-empty string", field("title")))?;
        let bullets = match item.get("bullets") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(list)) => list
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    b.as_str()
                        .map(one_line)
                        .ok_or_else(|| format!("{}[{j}]: expected a string", field("bullets")))
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => return Err(format!("{}: expected an array", field("bullets"))),
        };
        let slide_table = match item.get("table") {
            None | Some(Value::Null) => None,
            Some(t) => {
                let source: TableSource = t
                    .get("source")
                    .and_then(Value::as_str)
                    .ok_or_else(|| format!("{}: expected a string", field("table.source")))?
                    .parse()
                    .map_err(|e| format!("{}: {e}", field("table.source")))?;
                if source.shares(report).is_none() {
                    return Err(format!("{}: no such theme in the report", field("table.source")));
                }
                let labels: Vec<String> = t
                    .get("rows")
                    .and_then(Value::as_array)
                    .map(|rows| {
                        rows.iter()
                            .filter_map(|r| r.get("label").and_then(Value::as_str).map(str::to_string))
                            .collect()
                    })
                    .unwrap_or_default();
                let rows = table_rows(&source, &labels, report);
                Some(SlideTable { source, rows })
            }
        };
        let scope = slide_table.as_ref().map_or(Scope::Unscoped, |t| t.source.scope());
        let title = Some(inject(&title, &table, scope))
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| format!("Slide {}", i + 1));
        let bullets = bullets
            .iter()
            .map(|b| inject(b, &table, scope))
            .filter(|b| !b.is_empty())
            .collect();
        slides.push(Slide {
            kind,
            title,
            bullets,
            table: slide_table,
        });
    }

    if slides[0].kind != SlideKind::Title {
        slides.insert(0, title_slide(meta));
    }
    let has_experience = slides
        .iter()
        .any(|s| matches!(&s.table, Some(t) if t.source == TableSource::Experience));
    if !has_experience {
        slides.insert(1.min(slides.len()), experience_slide(report));
    }
    if slides.len() > *bounds.end() {
        return Err(format!(
            "slides: {} slides after adding required slides, limit is {}",
            slides.len(),
            bounds.end()
        ));
    }
    Ok(SlideDeckSpec {
        meta: meta.clone(),
        slides,
    })
}

/// Draft slides with the model, then fill every number from `report`.
pub fn generate_slide_content(
    report: &AnalysisReport,
    meta: &DeckMeta,
    bounds: RangeInclusive<usize>,
    client: &dyn LanguageModelClient,
    settings: &StageSettings,
) -> Result<SlideDeckSpec, StageFailure> {
    let input = serde_json::to_string_pretty(&json!({"meta": meta, "report": report})).unwrap();
    ask_validated(
        client,
        settings.retry,
        &Ask {
            stage: Stage::Slides,
            prompt: settings.prompts.get(Stage::Slides),
            input: &input,
            temperature: settings.creative_temperature,
        },
        |v| parse_slides(v, report, meta, &bounds),
    )
}

fn escape_cell(s: &str) -> String {
    s.replace('\\', "\\\\").replace('|', "\\|")
}

fn unescape_cell(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(next) = chars.next() {
                out.push(next);
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn split_row(line: &str) -> Vec<String> {
    let inner = line.trim().trim_start_matches('|');
    let mut cells = Vec::new();
    let mut current = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                current.push(c);
                if let Some(next) = chars.next() {
                    current.push(next);
                }
            }
            '|' => cells.push(unescape_cell(current.trim())),
            _ => current.push(c),
        }
        if c == '|' {
            current.clear();
        }
    }
    if !current.trim().is_empty() {
        cells.push(unescape_cell(current.trim()));
    }
    cells
}

/// The deck as Markdown. Same spec, same bytes.
pub fn render_deck(spec: &SlideDeckSpec) -> String {
    let mut out = String::from("---\nmarp: true\n");
    out.push_str(&format!("title: {}\n", json!(spec.meta.event_name)));
    if let Some(date) = &spec.meta.date {
        out.push_str(&format!("date: {}\n", json!(date)));
    }
    out.push_str("---\n");
    for (i, slide) in spec.slides.iter().enumerate() {
        if i > 0 {
            out.push_str("\n---\n");
        }
        out.push('\n');
        if slide.kind == SlideKind::Title {
            out.push_str("<!-- _class: title -->\n\n");
        }
        out.push_str(&format!("# {}\n", slide.title));
        if !slide.bullets.is_empty() {
            out.push('\n');
            for b in &slide.bullets {
                out.push_str(&format!("- {b}\n"));
            }
        }
        if let Some(table) = &slide.table {
            out.push_str(&format!("\n<!-- table: {} -->\n", table.source));
            out.push_str("| Category | Share (%) |\n| --- | ---: |\n");
            for row in &table.rows {
                out.push_str(&format!("| {} | {} |\n", escape_cell(&row.label), row.value));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("deck line {line}: {reason}")]
pub struct DeckParseError {
    pub line: usize,
    pub reason: String,
}

fn parse_percentage(s: &str) -> Option<Percentage> {
    let (whole, frac) = s.split_once('.')?;
    if frac.len() != 2 {
        return None;
    }
    let whole: u32 = whole.parse().ok()?;
    let frac: u32 = frac.parse().ok()?;
    Some(Percentage::from_hundredths(whole * 100 + frac))
}

/// Read back a deck written by [`render_deck`].
pub fn parse_deck(text: &str) -> Result<SlideDeckSpec, DeckParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let err = |line: usize, reason: &str| DeckParseError {
        line: line + 1,
        reason: reason.to_string(),
    };
    if lines.first() != Some(&"---") {
        return Err(err(0, "missing front matter"));
    }
    let close = lines[1..]
        .iter()
        .position(|l| *l == "---")
        .map(|p| p + 1)
        .ok_or_else(|| err(0, "unterminated front matter"))?;
    let mut meta = DeckMeta {
        event_name: String::new(),
        date: None,
    };
    for (i, line) in lines.iter().enumerate().take(close).skip(1) {
        let (key, value) = line.split_once(": ").ok_or_else(|| err(i, "expected `key: value`"))?;
        let decode = || serde_json::from_str::<String>(value).map_err(|_| err(i, "expected a quoted string"));
        match key {
            "marp" => {}
            "title" => meta.event_name = decode()?,
            "date" => meta.date = Some(decode()?),
            _ => return Err(err(i, "unknown front-matter key")),
        }
    }

    let mut slides: Vec<Slide> = Vec::new();
    let mut current: Option<Slide> = None;
    let mut pending_kind = SlideKind::Content;
    let mut table_source: Option<TableSource> = None;
    for (i, line) in lines.iter().enumerate().skip(close + 1) {
        if *line == "---" {
            slides.push(current.take().ok_or_else(|| err(i, "slide without a title"))?);
            pending_kind = SlideKind::Content;
            table_source = None;
        } else if *line == "<!-- _class: title -->" {
            pending_kind = SlideKind::Title;
        } else if let Some(title) = line.strip_prefix("# ") {
            if current.is_some() {
                return Err(err(i, "second title in one slide"));
            }
            current = Some(Slide {
                kind: pending_kind,
                title: title.to_string(),
                bullets: Vec::new(),
                table: None,
            });
        } else if let Some(bullet) = line.strip_prefix("- ") {
            let slide = current.as_mut().ok_or_else(|| err(i, "bullet before title"))?;
            slide.bullets.push(bullet.to_string());
        } else if let Some(rest) = line.strip_prefix("<!-- table: ") {
            let source = rest.trim_end_matches(" -->");
            table_source = Some(source.parse().map_err(|e: String| err(i, &e))?);
        } else if line.starts_with('|') {
            let Some(source) = table_source.clone() else {
                return Err(err(i, "table without source"));
            };
            let slide = current.as_mut().ok_or_else(|| err(i, "table before title"))?;
            let table = slide.table.get_or_insert(SlideTable { source, rows: Vec::new() });
            let cells = split_row(line);
            if cells.len() != 2 {
                return Err(err(i, "expected two table cells"));
            }
            if cells[0] == "Category" || cells[0] == "---" {
                continue;
            }
            let value = parse_percentage(&cells[1]).ok_or_else(|| err(i, "bad percentage"))?;
            table.rows.push(TableRow {
                label: cells[0].clone(),
                value,
            });
        } else if !line.trim().is_empty() {
            return Err(err(i, "unexpected line"));
        }
    }
    slides.push(current.ok_or_else(|| err(lines.len(), "deck ends without a slide"))?);
    Ok(SlideDeckSpec { meta, slides })
}
