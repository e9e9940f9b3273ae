//! Stage names and their prompt templates.
//!
//! Templates ship inside the binary and can be overridden per file from a
//! directory laid out like `prompts/` (`01_correct.txt` … `05_script.txt`).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Correct,
    Summarize,
    Analyze,
    Slides,
    Script,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Correct,
        Stage::Summarize,
        Stage::Analyze,
        Stage::Slides,
        Stage::Script,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Correct => "correct",
            Stage::Summarize => "summarize",
            Stage::Analyze => "analyze",
            Stage::Slides => "slides",
            Stage::Script => "script",
        }
    }

    /// File stem shared by the template and the checkpoint.
    pub fn file_stem(self) -> &'static str {
        match self {
            Stage::Correct => "01_correct",
            Stage::Summarize => "02_summarize",
            Stage::Analyze => "03_analyze",
            Stage::Slides => "04_slides",
            Stage::Script => "05_script",
        }
    }

    /// Stages that run once per session rather than once per run.
    pub fn is_per_session(self) -> bool {
        matches!(self, Stage::Correct | Stage::Summarize)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const BUILTIN: [&str; 5] = [
    include_str!("../prompts/01_correct.txt"),
    include_str!("../prompts/02_summarize.txt"),
    include_str!("../prompts/03_analyze.txt"),
    include_str!("../prompts/04_slides.txt"),
    include_str!("../prompts/05_script.txt"),
];

/// Prompt for turning slide content into python-pptx code. Not used by the
/// pipeline, which renders decks itself; shipped for users who want decks
/// built that way.
pub const SLIDE_CODE_TEMPLATE: &str = include_str!("../prompts/optional/04b_slide_code.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: [String; 5],
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptSet {
    pub fn builtin() -> Self {
        Self {
            templates: BUILTIN.map(String::from),
        }
    }

    /// Built-in templates, replaced by any `<stem>.txt` found in `dir`.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut set = Self::builtin();
        for stage in Stage::ALL {
            let path = dir.join(format!("{}.txt", stage.file_stem()));
            match std::fs::read_to_string(&path) {
                Ok(text) => set.templates[stage.index()] = text,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e),
            }
        }
        Ok(set)
    }

    pub fn with_template(mut self, stage: Stage, text: impl Into<String>) -> Self {
        self.templates[stage.index()] = text.into();
        self
    }

    pub fn get(&self, stage: Stage) -> &str {
        &self.templates[stage.index()]
    }

    pub fn hash(&self, stage: Stage) -> String {
        sha256_hex(self.get(stage).as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
