//! Stage 3: opinion distributions (computed here) and reason rankings
//! (delegated to the model).

use std::collections::BTreeMap;
use std::fmt;

use interviewer_core::llm::LanguageModelClient;
use interviewer_core::understanding::{AgreementClass, SentimentClass};
use interviewer_core::InterviewScript;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::client::{ask_validated, Ask};
use crate::prompts::Stage;
use crate::record::StructuredRecord;
use crate::{StageFailure, StageSettings};

/// Most reasons or clusters kept per category.
pub const MAX_RANKED: usize = 3;

/// A percentage held as an integer count of hundredths, so 69.05 is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Percentage(u32);

impl Percentage {
    pub fn from_hundredths(h: u32) -> Self {
        Self(h)
    }

    /// `100 * count / n`, rounded half-up to two decimals. `n == 0` gives 0.
    pub fn of(count: usize, n: usize) -> Self {
        if n == 0 {
            return Self(0);
        }
        let (count, n) = (count as u64, n as u64);
        Self(((20_000 * count + n) / (2 * n)) as u32)
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl fmt::Display for Percentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percentage {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percentage {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(0.0..=100.0).contains(&v) {
            return Err(serde::de::Error::custom(format!("percentage out of range: {v}")));
        }
        Ok(Self((v * 100.0).round() as u32))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    /// Category key (`positive`, `agree`, …).
    pub category: String,
    pub label: String,
    pub count: usize,
    pub percentage: Percentage,
}

/// Shares of `counts`, in the given order.
pub fn distribution(counts: &[(&str, usize)]) -> Vec<Share> {
    let n: usize = counts.iter().map(|(_, c)| c).sum();
    counts
        .iter()
        .map(|(category, count)| Share {
            category: category.to_string(),
            label: capitalize(category),
            count: *count,
            percentage: Percentage::of(*count, n),
        })
        .collect()
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemeSummary {
    pub theme_id: String,
    pub label: String,
    pub stance: Vec<Share>,
    pub motivation_clusters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub query: String,
    pub finding: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_sessions: usize,
    /// Overall interview experience: positive, neutral, negative.
    pub distribution: Vec<Share>,
    /// Ranked reasons per experience category.
    pub top_reasons: BTreeMap<String, Vec<String>>,
    pub per_theme: Vec<ThemeSummary>,
    #[serde(default)]
    pub additional_queries: Vec<Finding>,
}

impl AnalysisReport {
    pub fn theme(&self, id: &str) -> Option<&ThemeSummary> {
        self.per_theme.iter().find(|t| t.theme_id == id)
    }
}

/// Reasons ordered by frequency (case-insensitive), ties by first
/// appearance; blanks dropped.
pub fn rank_reasons<'a>(reasons: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen: Vec<(String, String, usize)> = Vec::new();
    for reason in reasons {
        let reason = reason.trim().trim_end_matches('.');
        if reason.is_empty() {
            continue;
        }
        let key = reason.to_lowercase();
        match seen.iter_mut().find(|(k, _, _)| *k == key) {
            Some(entry) => entry.2 += 1,
            None => seen.push((key, reason.to_string(), 1)),
        }
    }
    // stable sort keeps first-appearance order among equal counts
    seen.sort_by_key(|e| std::cmp::Reverse(e.2));
    seen.into_iter().map(|(_, r, _)| r).collect()
}

/// Theme id, label, stance counts and motivations.
type ThemeAggregate = (String, String, Vec<(AgreementClass, usize)>, Vec<String>);

struct Aggregate {
    n: usize,
    experience: Vec<(SentimentClass, usize, Vec<String>)>,
    themes: Vec<ThemeAggregate>,
}

fn aggregate(records: &[StructuredRecord], script: &InterviewScript) -> Aggregate {
    let experience = SentimentClass::ALL
        .iter()
        .map(|&class| {
            let matching: Vec<&StructuredRecord> = records
                .iter()
                .filter(|r| r.overall_experience.class == class)
                .collect();
            let reasons = matching
                .iter()
                .map(|r| r.overall_experience.reason.clone())
                .filter(|r| !r.is_empty())
                .collect();
            (class, matching.len(), reasons)
        })
        .collect();
    let themes = script
        .themes()
        .map(|topic| {
            let answers: Vec<_> = records.iter().filter_map(|r| r.themes.get(&topic.id)).collect();
            let counts = AgreementClass::ALL
                .iter()
                .map(|&c| (c, answers.iter().filter(|a| a.stance == c).count()))
                .collect();
            let motivations = answers
                .iter()
                .map(|a| a.motivation.clone())
                .filter(|m| !m.is_empty())
                .collect();
            (topic.id.clone(), topic.display_label().to_string(), counts, motivations)
        })
        .collect();
    Aggregate {
        n: records.len(),
        experience,
        themes,
    }
}

fn analysis_input(agg: &Aggregate, queries: &[String]) -> String {
    let experience: serde_json::Map<String, Value> = agg
        .experience
        .iter()
        .map(|(class, count, reasons)| (class.as_str().to_string(), json!({"count": count, "reasons": reasons})))
        .collect();
    let themes: Vec<Value> = agg
        .themes
        .iter()
        .map(|(id, label, _, motivations)| json!({"id": id, "label": label, "motivations": motivations}))
        .collect();
    serde_json::to_string_pretty(&json!({
        "n_sessions": agg.n,
        "experience": experience,
        "themes": themes,
        "queries": queries,
    }))
    .unwrap()
}

fn string_list(value: &Value, field: &str) -> Result<Vec<String>, String> {
    let items = value
        .as_array()
        .ok_or_else(|| format!("{field}: expected an array of strings"))?;
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let s = item
            .as_str()
            .ok_or_else(|| format!("{field}[{i}]: expected a string"))?
            .trim();
        if !s.is_empty() && out.len() < MAX_RANKED {
            out.push(s.to_string());
        }
    }
    Ok(out)
}

struct ModelAnalysis {
    top_reasons: BTreeMap<String, Vec<String>>,
    clusters: BTreeMap<String, Vec<String>>,
    findings: Vec<Finding>,
}

fn parse_analysis(value: &Value, agg: &Aggregate, queries: &[String]) -> Result<ModelAnalysis, String> {
    let reasons = value
        .get("top_reasons")
        .and_then(Value::as_object)
        .ok_or("top_reasons: expected an object keyed by category")?;
    let mut top_reasons = BTreeMap::new();
    for (class, count, _) in &agg.experience {
        let key = class.as_str();
        let list = match reasons.get(key) {
            Some(v) => string_list(v, &format!("top_reasons.{key}"))?,
            None if *count == 0 => Vec::new(),
            None => return Err(format!("top_reasons.{key}: missing")),
        };
        // a category nobody was coded into has no reasons, whatever the model says
        top_reasons.insert(key.to_string(), if *count == 0 { Vec::new() } else { list });
    }

    let empty = serde_json::Map::new();
    let clusters_value = match value.get("motivation_clusters") {
        None | Some(Value::Null) => &empty,
        Some(v) => v.as_object().ok_or("motivation_clusters: expected an object keyed by theme id")?,
    };
    for key in clusters_value.keys() {
        if !agg.themes.iter().any(|(id, ..)| id == key) {
            return Err(format!("motivation_clusters.{key}: not a theme of this script"));
        }
    }
    let mut clusters = BTreeMap::new();
    for (id, ..) in &agg.themes {
        let list = match clusters_value.get(id) {
            Some(v) => string_list(v, &format!("motivation_clusters.{id}"))?,
            None => Vec::new(),
        };
        clusters.insert(id.clone(), list);
    }

    let findings_value = value.get("findings").cloned().unwrap_or(Value::Array(Vec::new()));
    let items = findings_value.as_array().ok_or("findings: expected an array")?;
    if items.len() != queries.len() {
        return Err(format!("findings: expected {} entries, got {}", queries.len(), items.len()));
    }
    let mut findings = Vec::new();
    for (i, (item, query)) in items.iter().zip(queries).enumerate() {
        let finding = item["finding"]
            .as_str()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| format!("findings[{i}].finding: expected a non-empty string"))?;
        findings.push(Finding {
            query: query.clone(),
            finding: finding.to_string(),
        });
    }
    Ok(ModelAnalysis {
        top_reasons,
        clusters,
        findings,
    })
}

/// Aggregate `records`. Percentages are computed here; the model only
/// ranks reasons, clusters motivations and answers `queries`.
pub fn analyze(
    records: &[StructuredRecord],
    script: &InterviewScript,
    queries: &[String],
    client: &dyn LanguageModelClient,
    settings: &StageSettings,
) -> Result<AnalysisReport, StageFailure> {
    if records.is_empty() {
        return Err(StageFailure::Precondition("no records to analyze".into()));
    }
    let agg = aggregate(records, script);
    let input = analysis_input(&agg, queries);
    let model = ask_validated(
        client,
        settings.retry,
        &Ask {
            stage: Stage::Analyze,
            prompt: settings.prompts.get(Stage::Analyze),
            input: &input,
            temperature: settings.creative_temperature,
        },
        |v| parse_analysis(v, &agg, queries),
    )?;

    let experience_counts: Vec<(&str, usize)> = agg.experience.iter().map(|(c, n, _)| (c.as_str(), *n)).collect();
    let per_theme = agg
        .themes
        .iter()
        .map(|(id, label, counts, _)| {
            let counts: Vec<(&str, usize)> = counts.iter().map(|(c, n)| (c.as_str(), *n)).collect();
            ThemeSummary {
                theme_id: id.clone(),
                label: label.clone(),
                stance: distribution(&counts),
                motivation_clusters: model.clusters.get(id).cloned().unwrap_or_default(),
            }
        })
        .collect();
    Ok(AnalysisReport {
        n_sessions: agg.n,
        distribution: distribution(&experience_counts),
        top_reasons: model.top_reasons,
        per_theme,
        additional_queries: model.findings,
    })
}
