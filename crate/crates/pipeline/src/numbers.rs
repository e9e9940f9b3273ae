//! Numbers in generated text come from the report, never from the model.
//!
//! Model text may reference report values through placeholders such as
//! `{{experience.positive}}`. Literal numbers the model wrote itself are
//! checked: a percentage next to a known category label is overwritten with
//! that category's value, a participant count must be one the report
//! contains, and any sentence with a number that cannot be resolved is
//! dropped.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use crate::analysis::{AnalysisReport, Share};

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{\{\s*([A-Za-z0-9_.\-]+)\s*\}\}(\s*%|\s+percent\b)?").unwrap());
static PERCENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b\d+(?:\.\d+)?(?:\s*%|\s*per\s?cent\b)|\b\d{1,3}\.\d{2}\b").unwrap()
});
static CLAUSE_BREAK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[,;]|\b(and|while|whereas|but)\b").unwrap());
static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d+\b").unwrap());
static PEOPLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(participants?|people|respondents?|sessions?|interviews?|interviewees?|attendees?|visitors?|persons?)\b").unwrap()
});
static EXPERIENCE_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(positive|neutral|negative)\b").unwrap());
static STANCE_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(agree\w*|disagree\w*|unclear|undecided|unsure|no clear answer)\b").unwrap());

/// Which categories bare labels in a text refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope<'a> {
    Experience,
    Theme(&'a str),
    Unscoped,
}

/// Every value the report can contribute to generated text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NumberTable {
    percentages: BTreeMap<String, String>,
    counts: BTreeMap<String, usize>,
}

impl NumberTable {
    pub fn from_report(report: &AnalysisReport) -> Self {
        let mut table = Self::default();
        table.counts.insert("n_sessions".into(), report.n_sessions);
        let mut add = |prefix: &str, shares: &[Share]| {
            for s in shares {
                let key = format!("{prefix}.{}", s.category);
                table.counts.insert(format!("{key}.count"), s.count);
                table.percentages.insert(key, s.percentage.to_string());
            }
        };
        add("experience", &report.distribution);
        for theme in &report.per_theme {
            add(&format!("theme.{}", theme.theme_id), &theme.stance);
        }
        table
    }

    pub fn percentage(&self, key: &str) -> Option<&str> {
        self.percentages.get(key).map(String::as_str)
    }

    fn render(&self, key: &str) -> Option<String> {
        if let Some(p) = self.percentages.get(key) {
            return Some(format!("{p}%"));
        }
        self.counts.get(key).map(|c| c.to_string())
    }

    /// Counts a sentence about people may cite in `scope`.
    fn allowed_counts(&self, scope: Scope<'_>) -> Vec<usize> {
        let prefix = match scope {
            Scope::Experience => Some("experience.".to_string()),
            Scope::Theme(id) => Some(format!("theme.{id}.")),
            Scope::Unscoped => None,
        };
        self.counts
            .iter()
            .filter(|(k, _)| *k == "n_sessions" || prefix.as_ref().is_some_and(|p| k.starts_with(p.as_str())))
            .map(|(_, v)| *v)
            .collect()
    }

    fn label_key(&self, scope: Scope<'_>, label: &str) -> Option<String> {
        let label = label.to_lowercase();
        match scope {
            Scope::Experience => Some(format!("experience.{label}")),
            Scope::Theme(id) => {
                let category = if label.starts_with("disagree") {
                    "disagree"
                } else if label.starts_with("agree") {
                    "agree"
                } else {
                    "unclear"
                };
                Some(format!("theme.{id}.{category}"))
            }
            Scope::Unscoped => None,
        }
        .filter(|k| self.percentages.contains_key(k))
    }
}

fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'!' | b'?') && bytes.get(i + 1).is_some_and(|n| n.is_ascii_whitespace()) {
            out.push(&text[start..=i]);
            start = i + 1;
        }
    }
    out.push(&text[start..]);
    out.into_iter().map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// One sentence with literal numbers resolved, or `None` to drop it.
fn resolve_sentence(sentence: &str, table: &NumberTable, scope: Scope<'_>) -> Option<String> {
    // placeholders are trusted; mask them so their digits are not inspected
    let masked = PLACEHOLDER.replace_all(sentence, |c: &regex::Captures| "#".repeat(c[0].len()));
    let label_re = match scope {
        Scope::Experience => Some(&*EXPERIENCE_LABEL),
        Scope::Theme(_) => Some(&*STANCE_LABEL),
        Scope::Unscoped => None,
    };
    let labels: Vec<(std::ops::Range<usize>, String)> = label_re
        .map(|re| {
            re.find_iter(&masked)
                .filter_map(|m| table.label_key(scope, m.as_str()).map(|k| (m.range(), k)))
                .collect()
        })
        .unwrap_or_default();

    let breaks: Vec<usize> = CLAUSE_BREAK.find_iter(&masked).map(|b| b.start()).collect();
    let clause = |pos: usize| breaks.iter().filter(|&&b| b <= pos).count();

    let mut replacements: Vec<(std::ops::Range<usize>, String)> = Vec::new();
    for m in PERCENT.find_iter(&masked) {
        let gap = |label: &std::ops::Range<usize>| {
            if label.end <= m.start() {
                m.start() - label.end
            } else {
                label.start.saturating_sub(m.end())
            }
        };
        // the label must share the number's clause, unless the sentence
        // names only one category
        let nearest = labels
            .iter()
            .filter(|(range, _)| labels.len() == 1 || clause(range.start) == clause(m.start()))
            .min_by_key(|(range, _)| gap(range))
            .map(|(_, key)| key)?;
        let value = table.percentage(nearest)?;
        replacements.push((m.range(), format!("{value}%")));
    }
    if PEOPLE.is_match(&masked) {
        let allowed = table.allowed_counts(scope);
        for m in INTEGER.find_iter(&masked) {
            if replacements.iter().any(|(r, _)| r.contains(&m.start())) {
                continue;
            }
            let n: usize = m.as_str().parse().ok()?;
            if !allowed.contains(&n) {
                return None;
            }
        }
    }

    let mut out = sentence.to_string();
    for (range, value) in replacements.into_iter().rev() {
        out.replace_range(range, &value);
    }
    let mut unresolved = false;
    let filled = PLACEHOLDER.replace_all(&out, |c: &regex::Captures| match table.render(&c[1]) {
        Some(v) => v,
        None => {
            unresolved = true;
            String::new()
        }
    });
    (!unresolved).then(|| filled.into_owned())
}

/// Resolve placeholders and literal numbers in `text`; sentences with
/// numbers that cannot be tied to the report are removed.
pub fn inject(text: &str, table: &NumberTable, scope: Scope<'_>) -> String {
    let kept: Vec<String> = sentences(text)
        .into_iter()
        .filter_map(|s| {
            let resolved = resolve_sentence(s, table, scope);
            if resolved.is_none() {
                tracing::warn!(sentence = s, "dropped sentence with unsupported number");
            }
            resolved
        })
        .collect();
    kept.join(" ")
}

/// Append a sentence stating every share that `text` does not already
/// mention, so narration always carries the table's numbers.
pub fn ensure_shares(text: &str, rows: &[(String, String)]) -> String {
    let missing: Vec<String> = rows
        .iter()
        .filter(|(_, value)| !text.contains(value.as_str()))
        .map(|(label, value)| format!("{label} {value}%"))
        .collect();
    if missing.is_empty() {
        return text.to_string();
    }
    let sentence = format!("The figures are: {}.", missing.join(", "));
    if text.trim().is_empty() {
        sentence
    } else {
        format!("{} {sentence}", text.trim_end())
    }
}
