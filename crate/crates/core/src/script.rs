//! Interview scripts: the topic graph, lexicons and response banks that drive
//! the dialogue state machine.
//!
//! Scripts are JSON documents (see `schemas/interview_script.schema.json`).
//! Any lexicon list may be given inline or as `{"file": "relative/path.txt"}`
//! pointing at a UTF-8 file with one entry per line, resolved relative to the
//! script file.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::PhraseSet;
use crate::understanding::{AgreementClass, SentimentClass};

/// The shipped default script covering the four human-likeness themes plus a
/// closing experience question.
pub const DEFAULT_SCRIPT_JSON: &str = include_str!("../assets/humanlike_ai.json");

pub const END: &str = "END";

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed script document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("script has no topics")]
    NoTopics,
    #[error("duplicate topic id `{0}`")]
    DuplicateTopic(String),
    #[error("topic `{topic}` routes to unknown topic `{target}`")]
    UnknownTarget { topic: String, target: String },
    #[error("routing graph has a cycle through topic `{0}`")]
    Cycle(String),
    #[error("word limits invalid: min_answer_words={min}, extensive_answer_ceiling={ceiling}")]
    WordLimits { min: usize, ceiling: usize },
    #[error("`{0}` must not be empty")]
    EmptyList(&'static str),
    #[error("fluency configuration invalid: {0}")]
    Fluency(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicKind {
    /// An opinion theme; answers are summarized per theme.
    #[default]
    Theme,
    /// The participant's view of the interview itself.
    Experience,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RouteTarget {
    Topic(String),
    End,
}

impl RouteTarget {
    fn parse(raw: &str) -> Self {
        if raw == END {
            RouteTarget::End
        } else {
            RouteTarget::Topic(raw.to_string())
        }
    }

    fn as_str(&self) -> &str {
        match self {
            RouteTarget::Topic(id) => id,
            RouteTarget::End => END,
        }
    }
}

/// One edge of the routing graph, optionally spoken with an acknowledgement
/// before the next question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub target: RouteTarget,
    pub lead_in: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RouteRepr {
    Bare(String),
    Full {
        to: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lead_in: Option<String>,
    },
}

impl Serialize for Route {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match &self.lead_in {
            None => RouteRepr::Bare(self.target.as_str().to_string()),
            Some(lead_in) => RouteRepr::Full {
                to: self.target.as_str().to_string(),
                lead_in: Some(lead_in.clone()),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Route {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match RouteRepr::deserialize(deserializer)? {
            RouteRepr::Bare(to) => Route {
                target: RouteTarget::parse(&to),
                lead_in: None,
            },
            RouteRepr::Full { to, lead_in } => Route {
                target: RouteTarget::parse(&to),
                lead_in,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub kind: TopicKind,
    pub base_question: String,
    pub routing: Routing,
    #[serde(default)]
    pub max_followups: u32,
}

impl Topic {
    pub fn display_label(&self) -> &str {
        if self.label.is_empty() {
            &self.id
        } else {
            &self.label
        }
    }
}

/// Routing covers all three agreement classes by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Routing {
    pub agree: Route,
    pub disagree: Route,
    pub unclear: Route,
}

impl Routing {
    pub fn get(&self, class: AgreementClass) -> &Route {
        match class {
            AgreementClass::Agree => &self.agree,
            AgreementClass::Disagree => &self.disagree,
            AgreementClass::Unclear => &self.unclear,
        }
    }

    fn all(&self) -> [&Route; 3] {
        [&self.agree, &self.disagree, &self.unclear]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LexiconSource {
    Inline(Vec<String>),
    File { file: PathBuf },
}

impl Default for LexiconSource {
    fn default() -> Self {
        LexiconSource::Inline(Vec::new())
    }
}

impl LexiconSource {
    fn resolve(&self, base_dir: Option<&Path>) -> Result<Vec<String>, ScriptError> {
        let entries = match self {
            LexiconSource::Inline(entries) => entries.clone(),
            LexiconSource::File { file } => {
                let path = match base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                read_lexicon_file(&path)?
            }
        };
        Ok(entries
            .into_iter()
            .map(|e| e.trim().to_lowercase())
            .filter(|e| !e.is_empty())
            .collect())
    }
}

/// Read a one-entry-per-line lexicon file. Blank lines and `#` comments are skipped.
pub fn read_lexicon_file(path: &Path) -> Result<Vec<String>, ScriptError> {
    let raw = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolarityLexicon {
    pub positive: LexiconSource,
    pub negative: LexiconSource,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementLexicon {
    pub agree: LexiconSource,
    pub disagree: LexiconSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosingResponses {
    pub positive: String,
    pub neutral: String,
    pub negative: String,
}

impl ClosingResponses {
    pub fn for_sentiment(&self, sentiment: SentimentClass) -> &str {
        match sentiment {
            SentimentClass::Positive => &self.positive,
            SentimentClass::Neutral => &self.neutral,
            SentimentClass::Negative => &self.negative,
        }
    }
}

/// Speech-rate classification and the adaptations applied to slow speakers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluencyConfig {
    pub threshold_wpm: f64,
    /// Weight on the newest turn in the rolling mean.
    pub smoothing_weight: f64,
    pub standard_rate_factor: f64,
    pub low_rate_factor: f64,
    pub standard_turn_timeout_s: f64,
    pub low_turn_timeout_s: f64,
}

impl Default for FluencyConfig {
    fn default() -> Self {
        Self {
            threshold_wpm: 75.0,
            smoothing_weight: 0.5,
            standard_rate_factor: 1.0,
            low_rate_factor: 0.8,
            standard_turn_timeout_s: 3.0,
            low_turn_timeout_s: 6.0,
        }
    }
}

impl FluencyConfig {
    fn validate(&self) -> Result<(), ScriptError> {
        let finite = [
            self.threshold_wpm,
            self.smoothing_weight,
            self.standard_rate_factor,
            self.low_rate_factor,
            self.standard_turn_timeout_s,
            self.low_turn_timeout_s,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(ScriptError::Fluency("all values must be finite".into()));
        }
        if !(self.smoothing_weight > 0.0 && self.smoothing_weight <= 1.0) {
            return Err(ScriptError::Fluency("smoothing_weight must be in (0, 1]".into()));
        }
        if !(self.low_rate_factor > 0.0 && self.low_rate_factor < 1.0) {
            return Err(ScriptError::Fluency("low_rate_factor must be in (0, 1)".into()));
        }
        if self.standard_rate_factor <= self.low_rate_factor {
            return Err(ScriptError::Fluency(
                "standard_rate_factor must exceed low_rate_factor".into(),
            ));
        }
        if self.standard_turn_timeout_s <= 0.0
            || self.low_turn_timeout_s <= self.standard_turn_timeout_s
        {
            return Err(ScriptError::Fluency(
                "low_turn_timeout_s must exceed a positive standard_turn_timeout_s".into(),
            ));
        }
        Ok(())
    }
}

fn default_min_answer_words() -> usize {
    5
}
fn default_ceiling() -> usize {
    20
}
fn default_latency_budget() -> u64 {
    1500
}
fn default_repair_cap() -> u32 {
    2
}
fn default_minimal_backchannel() -> String {
    "mhmm".to_string()
}

/// The on-disk shape of a script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptDocument {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub topics: Vec<Topic>,
    pub polarity_lexicon: PolarityLexicon,
    pub agreement_lexicon: AgreementLexicon,
    pub reason_keywords: LexiconSource,
    pub followup_templates: Vec<String>,
    pub interim_fillers: Vec<String>,
    pub encourage_responses: Vec<String>,
    pub closing_responses: ClosingResponses,
    #[serde(default)]
    pub confusion_phrases: LexiconSource,
    #[serde(default)]
    pub giving_up_phrases: LexiconSource,
    #[serde(default)]
    pub repeat_prefix: String,
    #[serde(default)]
    pub forced_advance_lead_in: String,
    #[serde(default = "default_minimal_backchannel")]
    pub minimal_backchannel: String,
    #[serde(default = "default_min_answer_words")]
    pub min_answer_words: usize,
    #[serde(default = "default_ceiling")]
    pub extensive_answer_ceiling: usize,
    #[serde(default = "default_latency_budget")]
    pub filler_latency_budget_ms: u64,
    #[serde(default = "default_repair_cap")]
    pub repair_cap: u32,
    #[serde(default)]
    pub fluency: FluencyConfig,
}

/// Compiled phrase sets, built once at load.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub positive: PhraseSet,
    pub negative: PhraseSet,
    pub agree: PhraseSet,
    pub disagree: PhraseSet,
    pub reason: PhraseSet,
    pub confusion: PhraseSet,
    pub giving_up: PhraseSet,
}

/// A validated interview script.
#[derive(Clone)]
pub struct InterviewScript {
    pub id: String,
    pub title: String,
    pub topics: Vec<Topic>,
    pub followup_templates: Vec<String>,
    pub interim_fillers: Vec<String>,
    pub encourage_responses: Vec<String>,
    pub closing_responses: ClosingResponses,
    pub repeat_prefix: String,
    pub forced_advance_lead_in: String,
    pub minimal_backchannel: String,
    pub min_answer_words: usize,
    pub extensive_answer_ceiling: usize,
    pub filler_latency_budget_ms: u64,
    pub repair_cap: u32,
    pub fluency: FluencyConfig,
    lexicons: Lexicons,
    index: HashMap<String, usize>,
}

impl fmt::Debug for InterviewScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InterviewScript")
            .field("id", &self.id)
            .field("topics", &self.topics.len())
            .finish_non_exhaustive()
    }
}

impl InterviewScript {
    pub fn default_script() -> Self {
        Self::from_json(DEFAULT_SCRIPT_JSON).expect("shipped default script is valid")
    }

    /// Parse a script whose lexicons are all inline (file references resolve
    /// against the working directory).
    pub fn from_json(json: &str) -> Result<Self, ScriptError> {
        let doc: ScriptDocument = serde_json::from_str(json)?;
        Self::from_document(doc, None)
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: ScriptDocument = serde_json::from_str(&raw)?;
        Self::from_document(doc, path.parent())
    }

    pub fn from_document(doc: ScriptDocument, base_dir: Option<&Path>) -> Result<Self, ScriptError> {
        let positive = doc.polarity_lexicon.positive.resolve(base_dir)?;
        let negative = doc.polarity_lexicon.negative.resolve(base_dir)?;
        let agree = doc.agreement_lexicon.agree.resolve(base_dir)?;
        let disagree = doc.agreement_lexicon.disagree.resolve(base_dir)?;
        let reason = doc.reason_keywords.resolve(base_dir)?;
        let confusion = doc.confusion_phrases.resolve(base_dir)?;
        let giving_up = doc.giving_up_phrases.resolve(base_dir)?;

        if reason.is_empty() {
            return Err(ScriptError::EmptyList("reason_keywords"));
        }
        if doc.followup_templates.is_empty() {
            return Err(ScriptError::EmptyList("followup_templates"));
        }
        if doc.encourage_responses.is_empty() {
            return Err(ScriptError::EmptyList("encourage_responses"));
        }
        if doc.interim_fillers.is_empty() {
            return Err(ScriptError::EmptyList("interim_fillers"));
        }
        if doc.min_answer_words < 1 || doc.extensive_answer_ceiling <= doc.min_answer_words {
            return Err(ScriptError::WordLimits {
                min: doc.min_answer_words,
                ceiling: doc.extensive_answer_ceiling,
            });
        }
        doc.fluency.validate()?;

        let index = validate_topics(&doc.topics)?;

        Ok(Self {
            id: doc.id,
            title: doc.title,
            topics: doc.topics,
            followup_templates: doc.followup_templates,
            interim_fillers: doc.interim_fillers,
            encourage_responses: doc.encourage_responses,
            closing_responses: doc.closing_responses,
            repeat_prefix: doc.repeat_prefix,
            forced_advance_lead_in: doc.forced_advance_lead_in,
            minimal_backchannel: doc.minimal_backchannel,
            min_answer_words: doc.min_answer_words,
            extensive_answer_ceiling: doc.extensive_answer_ceiling,
            filler_latency_budget_ms: doc.filler_latency_budget_ms,
            repair_cap: doc.repair_cap,
            fluency: doc.fluency,
            lexicons: Lexicons {
                positive: PhraseSet::new(&positive),
                negative: PhraseSet::new(&negative),
                agree: PhraseSet::new(&agree),
                disagree: PhraseSet::new(&disagree),
                reason: PhraseSet::new(&reason),
                confusion: PhraseSet::new(&confusion),
                giving_up: PhraseSet::new(&giving_up),
            },
            index,
        })
    }

    pub fn lexicons(&self) -> &Lexicons {
        &self.lexicons
    }

    pub fn first_topic(&self) -> &Topic {
        &self.topics[0]
    }

    pub fn topic(&self, id: &str) -> Option<&Topic> {
        self.index.get(id).map(|&i| &self.topics[i])
    }

    /// Opinion themes in script order.
    pub fn themes(&self) -> impl Iterator<Item = &Topic> {
        self.topics.iter().filter(|t| t.kind == TopicKind::Theme)
    }

    pub fn experience_topic(&self) -> Option<&Topic> {
        self.topics.iter().find(|t| t.kind == TopicKind::Experience)
    }

    /// Upper bound on system turns after the opening question, assuming
    /// every topic is visited.
    pub fn max_system_turns(&self) -> usize {
        self.topics
            .iter()
            .map(|t| 1 + t.max_followups as usize + self.repair_cap as usize)
            .sum()
    }
}

fn validate_topics(topics: &[Topic]) -> Result<HashMap<String, usize>, ScriptError> {
    if topics.is_empty() {
        return Err(ScriptError::NoTopics);
    }
    let mut index = HashMap::new();
    for (i, topic) in topics.iter().enumerate() {
        if index.insert(topic.id.clone(), i).is_some() {
            return Err(ScriptError::DuplicateTopic(topic.id.clone()));
        }
    }
    for topic in topics {
        for route in topic.routing.all() {
            if let RouteTarget::Topic(target) = &route.target {
                if !index.contains_key(target) {
                    return Err(ScriptError::UnknownTarget {
                        topic: topic.id.clone(),
                        target: target.clone(),
                    });
                }
            }
        }
    }

    // Every path must terminate at END; reject cycles with a colouring DFS.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Open,
        Done,
    }
    let mut marks = vec![Mark::Fresh; topics.len()];
    fn visit(
        i: usize,
        topics: &[Topic],
        index: &HashMap<String, usize>,
        marks: &mut [Mark],
    ) -> Result<(), ScriptError> {
        match marks[i] {
            Mark::Done => return Ok(()),
            Mark::Open => return Err(ScriptError::Cycle(topics[i].id.clone())),
            Mark::Fresh => {}
        }
        marks[i] = Mark::Open;
        let targets: BTreeSet<usize> = topics[i]
            .routing
            .all()
            .iter()
            .filter_map(|r| match &r.target {
                RouteTarget::Topic(t) => Some(index[t]),
                RouteTarget::End => None,
            })
            .collect();
        for next in targets {
            visit(next, topics, index, marks)?;
        }
        marks[i] = Mark::Done;
        Ok(())
    }
    for i in 0..topics.len() {
        visit(i, topics, &index, &mut marks)?;
    }
    Ok(index)
}
