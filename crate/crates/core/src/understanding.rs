//! Keyword-based language understanding: sentiment, agreement and answer
//! sufficiency.

use serde::{Deserialize, Serialize};

use crate::script::InterviewScript;
use crate::text;
use crate::utterance::UserUtterance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentimentClass {
    Positive,
    Neutral,
    Negative,
}

impl SentimentClass {
    pub const ALL: [SentimentClass; 3] = [
        SentimentClass::Positive,
        SentimentClass::Neutral,
        SentimentClass::Negative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentClass::Positive => "positive",
            SentimentClass::Neutral => "neutral",
            SentimentClass::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementClass {
    Agree,
    Disagree,
    Unclear,
}

impl AgreementClass {
    pub const ALL: [AgreementClass; 3] = [
        AgreementClass::Agree,
        AgreementClass::Disagree,
        AgreementClass::Unclear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgreementClass::Agree => "agree",
            AgreementClass::Disagree => "disagree",
            AgreementClass::Unclear => "unclear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderstandingResult {
    pub sentiment: SentimentClass,
    pub agreement: AgreementClass,
    pub has_reason_keyword: bool,
    pub word_count: usize,
}

pub fn classify_sentiment(text: &str, script: &InterviewScript) -> SentimentClass {
    let tokens = text::tokenize(text);
    let lex = script.lexicons();
    let positive = lex.positive.hits_in(&tokens);
    let negative = lex.negative.hits_in(&tokens);
    match positive.cmp(&negative) {
        std::cmp::Ordering::Greater => SentimentClass::Positive,
        std::cmp::Ordering::Less => SentimentClass::Negative,
        std::cmp::Ordering::Equal => SentimentClass::Neutral,
    }
}

/// Disagreement phrases are checked first so that "not really" wins over an
/// agreement word elsewhere in the answer.
pub fn detect_agreement(text: &str, script: &InterviewScript) -> AgreementClass {
    let tokens = text::tokenize(text);
    let lex = script.lexicons();
    if lex.disagree.any_in(&tokens) {
        AgreementClass::Disagree
    } else if lex.agree.any_in(&tokens) {
        AgreementClass::Agree
    } else {
        AgreementClass::Unclear
    }
}

pub fn has_reason_keyword(text: &str, script: &InterviewScript) -> bool {
    script.lexicons().reason.any_in(&text::tokenize(text))
}

/// Whether an answer is too thin to move on from.
///
/// Short answers always need a follow-up. Longer answers need one unless
/// they give a reason or run past the extensive-answer ceiling.
pub fn needs_followup(utterance: &UserUtterance, script: &InterviewScript) -> bool {
    let words = text::word_count(&utterance.text);
    if words < script.min_answer_words {
        return true;
    }
    !has_reason_keyword(&utterance.text, script) && words < script.extensive_answer_ceiling
}

pub fn understand(text: &str, script: &InterviewScript) -> UnderstandingResult {
    UnderstandingResult {
        sentiment: classify_sentiment(text, script),
        agreement: detect_agreement(text, script),
        has_reason_keyword: has_reason_keyword(text, script),
        word_count: text::word_count(text),
    }
}
