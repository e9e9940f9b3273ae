//! Conversational repair: repeating, encouraging and covering for latency.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::script::InterviewScript;
use crate::text;
use crate::utterance::{AsrStatus, UserUtterance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    None,
    RepeatQuestion,
    Encourage,
    MinimalBackchannel,
    InterimFiller,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairDecision {
    pub kind: RepairKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl RepairDecision {
    pub fn none() -> Self {
        Self {
            kind: RepairKind::None,
            payload: None,
        }
    }

    pub fn is_none(&self) -> bool {
        self.kind == RepairKind::None
    }
}

/// Decide whether `utterance` signals a breakdown.
///
/// Precedence: confusion, then giving up, then unrecognized voice, then
/// silence. `encourage_index` selects the encouragement wording.
pub fn decide_repair(
    utterance: &UserUtterance,
    script: &InterviewScript,
    encourage_index: usize,
) -> RepairDecision {
    let tokens = text::tokenize(&utterance.text);
    let lex = script.lexicons();
    let encourage = || {
        let responses = &script.encourage_responses;
        responses[encourage_index % responses.len()].clone()
    };

    if lex.confusion.any_in(&tokens) {
        return RepairDecision {
            kind: RepairKind::RepeatQuestion,
            payload: None,
        };
    }
    if lex.giving_up.any_in(&tokens) {
        return RepairDecision {
            kind: RepairKind::Encourage,
            payload: Some(encourage()),
        };
    }
    match utterance.asr_status {
        AsrStatus::EmptyWithVoice => RepairDecision {
            kind: RepairKind::MinimalBackchannel,
            payload: Some(script.minimal_backchannel.clone()),
        },
        // An injected timeout turn: nudge the participant to keep going.
        AsrStatus::Silence => RepairDecision {
            kind: RepairKind::Encourage,
            payload: Some(encourage()),
        },
        AsrStatus::Ok => RepairDecision::none(),
    }
}

/// Round-robin interim fillers spoken when the next question is late.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterimFillers {
    next: usize,
}

impl InterimFillers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn interim_filler(&mut self, elapsed: Duration, script: &InterviewScript) -> Option<String> {
        let budget = Duration::from_millis(script.filler_latency_budget_ms);
        if elapsed <= budget || script.interim_fillers.is_empty() {
            return None;
        }
        let filler = script.interim_fillers[self.next % script.interim_fillers.len()].clone();
        self.next += 1;
        Some(filler)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script() -> InterviewScript {
        InterviewScript::default_script()
    }

    #[test]
    fn repair_examples() {
        let s = script();
        let d = decide_repair(&UserUtterance::recognized("Pardon? Could you say that again?", 2.0), &s, 0);
        assert_eq!(d.kind, RepairKind::RepeatQuestion);
        let d = decide_repair(&UserUtterance::recognized("I have no idea.", 2.0), &s, 0);
        assert_eq!(d.kind, RepairKind::Encourage);
        assert_eq!(d.payload.as_deref(), Some(s.encourage_responses[0].as_str()));
        let d = decide_repair(&UserUtterance::unrecognized(1.2), &s, 0);
        assert_eq!(d.kind, RepairKind::MinimalBackchannel);
        assert_eq!(d.payload.as_deref(), Some("mhmm"));
        let d = decide_repair(&UserUtterance::recognized("I think empathy matters most.", 2.0), &s, 0);
        assert_eq!(d, RepairDecision::none());
        assert!(d.payload.is_none());
    }

    #[test]
    fn encouragement_rotates() {
        let s = script();
        let u = UserUtterance::recognized("I don't know", 1.0);
        let a = decide_repair(&u, &s, 0).payload;
        let b = decide_repair(&u, &s, 1).payload;
        assert_ne!(a, b);
        assert_eq!(decide_repair(&u, &s, 2).payload, a);
    }

    #[test]
    fn confusion_beats_giving_up() {
        let s = script();
        let u = UserUtterance::recognized("Pardon? I don't know what you mean.", 2.0);
        assert_eq!(decide_repair(&u, &s, 0).kind, RepairKind::RepeatQuestion);
    }

    #[test]
    fn silence_encourages() {
        let s = script();
        assert_eq!(decide_repair(&UserUtterance::silence(), &s, 0).kind, RepairKind::Encourage);
    }

    #[test]
    fn fillers_respect_budget_and_rotate() {
        let s = script();
        let mut fillers = InterimFillers::new();
        assert_eq!(fillers.interim_filler(Duration::from_millis(100), &s), None);
        assert_eq!(fillers.interim_filler(Duration::from_millis(1500), &s), None);
        let first = fillers.interim_filler(Duration::from_millis(2500), &s).unwrap();
        assert_eq!(first, "That's interesting!");
        let second = fillers.interim_filler(Duration::from_millis(2500), &s).unwrap();
        assert_eq!(second, "That's a good point!");
        assert_ne!(first, second);
    }
}
