//! The interview state machine.
//!
//! Each user turn is handled in a fixed order: repair check, then answer
//! sufficiency (follow-up), then routing on agreement. Routing to `END`
//! produces a sentiment-dependent closing and moves the session to
//! [`Phase::Closing`]; [`DialogueEngine::finish`] completes it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluency::{update_fluency, FluencyProfile};
use crate::followup::{generate_followup, FollowupContext, FollowupMode};
use crate::gesture::GestureTag;
use crate::repair::{decide_repair, RepairDecision, RepairKind};
use crate::script::{InterviewScript, RouteTarget, Topic};
use crate::understanding::{
    needs_followup, understand, AgreementClass, SentimentClass, UnderstandingResult,
};
use crate::utterance::{AsrStatus, UserUtterance};

/// Question/answer pairs kept for generative follow-ups.
const CONTEXT_TURNS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingAnswer,
    Closing,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Ask,
    Repeat,
    Encourage,
    Filler,
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemAction {
    pub kind: ActionKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gesture: Option<GestureTag>,
    pub speech_rate_factor: f64,
    /// Topic the action belongs to (the new topic after a transition).
    pub topic_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub question_id: String,
    pub understanding: UnderstandingResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub current_topic: String,
    pub followups_asked: u32,
    /// Repairs spent on the current topic.
    pub repairs: u32,
    pub phase: Phase,
    pub fluency: FluencyProfile,
    pub history: Vec<HistoryEntry>,
    pub last_question: String,
    pub templates_used: usize,
    pub encouragements: usize,
    pub recent: Vec<(String, String)>,
}

/// What a turn did, for logging and state-change events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transition {
    Repair { repair: RepairKind },
    FollowUp,
    Advance { from: String, to: String },
    /// Repair budget spent; moved on regardless of the answer.
    ForcedAdvance { from: String, to: Option<String> },
    Close { sentiment: SentimentClass },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub state: DialogueState,
    pub action: SystemAction,
    pub transition: Transition,
    pub repair: RepairDecision,
    pub understanding: Option<UnderstandingResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error("session is not awaiting an answer (phase {0:?})")]
    NotAwaitingAnswer(Phase),
    #[error("script has no topic `{0}`")]
    UnknownTopic(String),
}

#[derive(Debug, Clone)]
pub struct DialogueEngine {
    script: Arc<InterviewScript>,
    followups: FollowupMode,
}

impl DialogueEngine {
    pub fn new(script: Arc<InterviewScript>, followups: FollowupMode) -> Self {
        Self { script, followups }
    }

    pub fn template(script: Arc<InterviewScript>) -> Self {
        Self::new(script, FollowupMode::Template)
    }

    pub fn script(&self) -> &Arc<InterviewScript> {
        &self.script
    }

    /// Fresh state positioned at the first topic, plus its opening question.
    pub fn start(&self) -> (DialogueState, SystemAction) {
        self.open(self.script.first_topic())
    }

    /// Fresh state positioned at `topic_id` instead of the first topic.
    pub fn start_at(&self, topic_id: &str) -> Result<(DialogueState, SystemAction), DialogueError> {
        Ok(self.open(self.topic(topic_id)?))
    }

    fn open(&self, topic: &Topic) -> (DialogueState, SystemAction) {
        let fluency = FluencyProfile::initial(&self.script.fluency);
        let action = SystemAction {
            kind: ActionKind::Ask,
            text: topic.base_question.clone(),
            gesture: Some(GestureTag::OpenPalm),
            speech_rate_factor: fluency.speech_rate_factor,
            topic_id: topic.id.clone(),
        };
        let state = DialogueState {
            current_topic: topic.id.clone(),
            followups_asked: 0,
            repairs: 0,
            phase: Phase::AwaitingAnswer,
            fluency,
            history: Vec::new(),
            last_question: topic.base_question.clone(),
            templates_used: 0,
            encouragements: 0,
            recent: Vec::new(),
        };
        (state, action)
    }

    pub fn advance(&self, state: &DialogueState, utterance: &UserUtterance) -> Result<Turn, DialogueError> {
        if state.phase != Phase::AwaitingAnswer {
            return Err(DialogueError::NotAwaitingAnswer(state.phase));
        }
        let script = &*self.script;
        let topic = self.topic(&state.current_topic)?;
        let mut next = state.clone();

        match update_fluency(&state.fluency, utterance, &script.fluency) {
            Ok(profile) => next.fluency = profile,
            Err(err) => tracing::warn!(error = %err, "fluency measurement skipped"),
        }

        let repair = decide_repair(utterance, script, state.encouragements);
        if !repair.is_none() {
            if next.repairs < script.repair_cap {
                return Ok(self.repair_turn(next, repair));
            }
            return self.forced_advance(next, topic, repair);
        }

        let understanding = understand(&utterance.text, script);
        next.history.push(HistoryEntry {
            question_id: topic.id.clone(),
            understanding: understanding.clone(),
        });
        next.recent.push((state.last_question.clone(), utterance.text.clone()));
        if next.recent.len() > CONTEXT_TURNS {
            next.recent.remove(0);
        }

        if utterance.asr_status == AsrStatus::Ok
            && next.followups_asked < topic.max_followups
            && needs_followup(utterance, script)
        {
            let context = FollowupContext {
                turns: next.recent.clone(),
            };
            let followup = generate_followup(&context, &self.followups, script, next.templates_used);
            if followup.from_template {
                next.templates_used += 1;
            }
            next.followups_asked += 1;
            next.last_question = followup.text.clone();
            let action = SystemAction {
                kind: ActionKind::Ask,
                text: followup.text,
                gesture: None,
                speech_rate_factor: next.fluency.speech_rate_factor,
                topic_id: topic.id.clone(),
            };
            return Ok(Turn {
                state: next,
                action,
                transition: Transition::FollowUp,
                repair,
                understanding: Some(understanding),
            });
        }

        let extensive = understanding.word_count >= script.extensive_answer_ceiling;
        let route = topic.routing.get(understanding.agreement);
        match &route.target {
            RouteTarget::Topic(target) => {
                let target_topic = self.topic(target)?;
                let text = join_speech(route.lead_in.as_deref(), &target_topic.base_question);
                let gesture = if extensive {
                    GestureTag::LeanBack
                } else {
                    GestureTag::OpenPalm
                };
                let action = self.enter_topic(&mut next, target_topic, text, ActionKind::Ask, gesture);
                Ok(Turn {
                    state: next,
                    action,
                    transition: Transition::Advance {
                        from: topic.id.clone(),
                        to: target.clone(),
                    },
                    repair,
                    understanding: Some(understanding),
                })
            }
            RouteTarget::End => {
                let sentiment = understanding.sentiment;
                let action = self.close(&mut next, topic, sentiment);
                Ok(Turn {
                    state: next,
                    action,
                    transition: Transition::Close { sentiment },
                    repair,
                    understanding: Some(understanding),
                })
            }
        }
    }

    /// Mark a closing session as done once the closing line has been delivered.
    pub fn finish(&self, state: &DialogueState) -> DialogueState {
        let mut next = state.clone();
        if next.phase == Phase::Closing {
            next.phase = Phase::Done;
        }
        next
    }

    fn topic(&self, id: &str) -> Result<&Topic, DialogueError> {
        self.script
            .topic(id)
            .ok_or_else(|| DialogueError::UnknownTopic(id.to_string()))
    }

    fn repair_turn(&self, mut next: DialogueState, repair: RepairDecision) -> Turn {
        let script = &*self.script;
        next.repairs += 1;
        let (kind, text) = match repair.kind {
            RepairKind::RepeatQuestion => (
                ActionKind::Repeat,
                join_speech(Some(&script.repeat_prefix), &next.last_question),
            ),
            RepairKind::Encourage => {
                next.encouragements += 1;
                (ActionKind::Encourage, repair.payload.clone().unwrap_or_default())
            }
            // A bare backchannel invites the participant to carry on.
            RepairKind::MinimalBackchannel => {
                (ActionKind::Encourage, repair.payload.clone().unwrap_or_default())
            }
            RepairKind::InterimFiller => (ActionKind::Filler, repair.payload.clone().unwrap_or_default()),
            RepairKind::None => unreachable!("repair_turn called without a repair"),
        };
        let action = SystemAction {
            kind,
            text,
            gesture: None,
            speech_rate_factor: next.fluency.speech_rate_factor,
            topic_id: next.current_topic.clone(),
        };
        Turn {
            state: next,
            action,
            transition: Transition::Repair { repair: repair.kind },
            repair,
            understanding: None,
        }
    }

    fn forced_advance(
        &self,
        mut next: DialogueState,
        topic: &Topic,
        repair: RepairDecision,
    ) -> Result<Turn, DialogueError> {
        let script = &*self.script;
        let route = topic.routing.get(AgreementClass::Unclear);
        match &route.target {
            RouteTarget::Topic(target) => {
                let target_topic = self.topic(target)?;
                let encourage = &script.encourage_responses
                    [next.encouragements % script.encourage_responses.len()];
                next.encouragements += 1;
                let lead = join_speech(Some(encourage), &script.forced_advance_lead_in);
                let text = join_speech(Some(&lead), &target_topic.base_question);
                let action = self.enter_topic(
                    &mut next,
                    target_topic,
                    text,
                    ActionKind::Encourage,
                    GestureTag::OpenPalm,
                );
                Ok(Turn {
                    state: next,
                    action,
                    transition: Transition::ForcedAdvance {
                        from: topic.id.clone(),
                        to: Some(target.clone()),
                    },
                    repair,
                    understanding: None,
                })
            }
            RouteTarget::End => {
                let action = self.close(&mut next, topic, SentimentClass::Neutral);
                Ok(Turn {
                    state: next,
                    action,
                    transition: Transition::ForcedAdvance {
                        from: topic.id.clone(),
                        to: None,
                    },
                    repair,
                    understanding: None,
                })
            }
        }
    }

    fn enter_topic(
        &self,
        next: &mut DialogueState,
        target: &Topic,
        text: String,
        kind: ActionKind,
        gesture: GestureTag,
    ) -> SystemAction {
        next.current_topic = target.id.clone();
        next.followups_asked = 0;
        next.repairs = 0;
        next.last_question = target.base_question.clone();
        SystemAction {
            kind,
            text,
            gesture: Some(gesture),
            speech_rate_factor: next.fluency.speech_rate_factor,
            topic_id: target.id.clone(),
        }
    }

    fn close(&self, next: &mut DialogueState, topic: &Topic, sentiment: SentimentClass) -> SystemAction {
        next.phase = Phase::Closing;
        SystemAction {
            kind: ActionKind::Close,
            text: self.script.closing_responses.for_sentiment(sentiment).to_string(),
            gesture: Some(GestureTag::Bow),
            speech_rate_factor: next.fluency.speech_rate_factor,
            topic_id: topic.id.clone(),
        }
    }
}

fn join_speech(lead: Option<&str>, body: &str) -> String {
    match lead.map(str::trim).filter(|l| !l.is_empty()) {
        Some(lead) if body.trim().is_empty() => lead.to_string(),
        Some(lead) => format!("{lead} {}", body.trim()),
        None => body.trim().to_string(),
    }
}
