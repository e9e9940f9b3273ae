use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ProsodyFrame;
use crate::gesture::NodPattern;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("frame at {got} ms arrived after frame at {last} ms")]
    OutOfOrder { last: u64, got: u64 },
}

/// Watches a prosody stream and reports when a backchannel would fit.
pub trait BackchannelPredictor: Send {
    /// Feed one frame; returns the trigger time when one fires on this frame.
    /// An out-of-order frame resets the predictor for the current turn.
    fn observe(&mut self, frame: &ProsodyFrame) -> Result<Option<u64>, StreamError>;

    /// Start a new user turn.
    fn reset(&mut self);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Voiced time required in the turn before the first backchannel.
    pub min_voiced_ms: u64,
    /// Pause length that opens a backchannel slot.
    pub pause_ms: u64,
    /// Window of final voiced frames used for the pitch slope.
    pub slope_window_ms: u64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            min_voiced_ms: 1500,
            pause_ms: 400,
            slope_window_ms: 300,
        }
    }
}

/// Fires once per pause when the speaker has talked long enough, has paused
/// for `pause_ms`, and the phrase ended on a flat or falling pitch.
#[derive(Debug, Clone)]
pub struct HeuristicPredictor {
    config: HeuristicConfig,
    last: Option<ProsodyFrame>,
    voiced_ms: u64,
    pause_start: Option<u64>,
    fired: bool,
    tail: VecDeque<(u64, f64)>,
}

impl HeuristicPredictor {
    pub fn new(config: HeuristicConfig) -> Self {
        Self {
            config,
            last: None,
            voiced_ms: 0,
            pause_start: None,
            fired: false,
            tail: VecDeque::new(),
        }
    }

    pub fn config(&self) -> &HeuristicConfig {
        &self.config
    }

    pub fn voiced_ms(&self) -> u64 {
        self.voiced_ms
    }

    fn tail_slope(&self) -> f64 {
        least_squares_slope(self.tail.iter().copied())
    }
}

impl Default for HeuristicPredictor {
    fn default() -> Self {
        Self::new(HeuristicConfig::default())
    }
}

/// Slope in Hz/s of f0 against time; 0 with fewer than two points.
pub(crate) fn least_squares_slope(points: impl Iterator<Item = (u64, f64)> + Clone) -> f64 {
    let n = points.clone().count();
    if n < 2 {
        return 0.0;
    }
    let n = n as f64;
    let mean_t = points.clone().map(|(t, _)| t as f64 / 1000.0).sum::<f64>() / n;
    let mean_f = points.clone().map(|(_, f)| f).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, f) in points {
        let dt = t as f64 / 1000.0 - mean_t;
        num += dt * (f - mean_f);
        den += dt * dt;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl BackchannelPredictor for HeuristicPredictor {
    fn observe(&mut self, frame: &ProsodyFrame) -> Result<Option<u64>, StreamError> {
        if let Some(last) = self.last {
            if frame.t < last.t {
                self.reset();
                return Err(StreamError::OutOfOrder {
                    last: last.t,
                    got: frame.t,
                });
            }
            if last.voiced {
                self.voiced_ms += frame.t - last.t;
            }
        }
        let was_voiced = self.last.is_some_and(|l| l.voiced);
        self.last = Some(*frame);

        if frame.voiced {
            self.pause_start = None;
            self.fired = false;
            self.tail.push_back((frame.t, frame.f0));
            let horizon = frame.t.saturating_sub(self.config.slope_window_ms);
            while self.tail.front().is_some_and(|&(t, _)| t < horizon) {
                self.tail.pop_front();
            }
            return Ok(None);
        }

        if was_voiced {
            self.pause_start = Some(frame.t);
        }
        let Some(pause_start) = self.pause_start else {
            return Ok(None);
        };
        if !self.fired
            && frame.t - pause_start >= self.config.pause_ms
            && self.voiced_ms >= self.config.min_voiced_ms
            && self.tail_slope() <= 0.0
        {
            self.fired = true;
            return Ok(Some(frame.t));
        }
        Ok(None)
    }

    fn reset(&mut self) {
        self.last = None;
        self.voiced_ms = 0;
        self.pause_start = None;
        self.fired = false;
        self.tail.clear();
    }
}

/// Verbal backchannel tokens, their audio assets, and nod patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repertoire {
    pub tokens: Vec<String>,
    /// token -> audio file name
    pub assets: BTreeMap<String, String>,
    pub nod_patterns: Vec<NodPattern>,
}

impl Default for Repertoire {
    fn default() -> Self {
        let tokens: Vec<String> = ["hmm", "erm", "mhmm"].iter().map(|s| s.to_string()).collect();
        let assets = tokens
            .iter()
            .map(|t| (t.clone(), format!("bc_{t}.wav")))
            .collect();
        Self {
            tokens,
            assets,
            nod_patterns: NodPattern::DEFAULTS.to_vec(),
        }
    }
}

impl Repertoire {
    /// Replace the asset table with a JSON map `token -> file name`. Every
    /// token must have an entry.
    pub fn with_asset_table(mut self, json: &str) -> Result<Self, String> {
        let table: BTreeMap<String, String> =
            serde_json::from_str(json).map_err(|e| format!("asset table: {e}"))?;
        if let Some(missing) = self.tokens.iter().find(|t| !table.contains_key(*t)) {
            return Err(format!("asset table has no entry for `{missing}`"));
        }
        self.assets = table;
        Ok(self)
    }

    pub fn asset_for(&self, token: &str) -> Option<&str> {
        self.assets.get(token).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackchannelPlan {
    pub token: String,
    pub asset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nod: Option<NodPattern>,
    pub at: u64,
}

/// Pick the next verbal + nod backchannel. Never repeats the previous token
/// when the repertoire has more than one; nods cycle through the pattern set.
pub fn choose_backchannel_form(history: &[BackchannelPlan], repertoire: &Repertoire, at: u64) -> BackchannelPlan {
    assert!(!repertoire.tokens.is_empty(), "backchannel repertoire is empty");
    let tokens = &repertoire.tokens;
    let index = match history.last() {
        None => 0,
        Some(prev) => match tokens.iter().position(|t| *t == prev.token) {
            Some(i) => (i + 1) % tokens.len(),
            None => 0,
        },
    };
    let token = tokens[index].clone();
    let asset_id = repertoire
        .asset_for(&token)
        .map(str::to_string)
        .unwrap_or_else(|| format!("{token}.wav"));
    let nod = (!repertoire.nod_patterns.is_empty())
        .then(|| repertoire.nod_patterns[history.len() % repertoire.nod_patterns.len()]);
    BackchannelPlan {
        token,
        asset_id,
        nod,
        at,
    }
}
