use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodSpeed {
    Slow,
    Fast,
}

impl NodSpeed {
    pub fn as_str(self) -> &'static str {
        match self {
            NodSpeed::Slow => "slow",
            NodSpeed::Fast => "fast",
        }
    }
}

/// A head-nod pattern: nods per second and movement speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodPattern {
    pub frequency: f64,
    pub speed: NodSpeed,
}

impl NodPattern {
    /// Default pattern set cycled by the backchannel generator.
    pub const DEFAULTS: [NodPattern; 2] = [
        NodPattern {
            frequency: 1.0,
            speed: NodSpeed::Slow,
        },
        NodPattern {
            frequency: 2.0,
            speed: NodSpeed::Fast,
        },
    ];
}

/// Symbolic gesture emitted alongside system speech.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GestureTag {
    OpenPalm,
    LeanBack,
    Bow,
    Nod(NodPattern),
}
