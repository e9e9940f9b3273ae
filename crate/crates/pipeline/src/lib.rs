//! Post-interview pipeline: turns finalized interview transcripts into an
//! analysis report, a slide deck and a narration script.
//!
//! Five stages run in order, each one a language-model call with a
//! validated output contract:
//!
//! 1. [`correct::correct_transcript`] fixes recognition errors per session.
//! 2. [`summarize::summarize_to_records`] codes each session into a record.
//! 3. [`analysis::analyze`] aggregates records; percentages are computed here.
//! 4. [`slides::generate_slide_content`] drafts slides.
//! 5. [`narration::generate_presentation_script`] drafts the narration.
//!
//! [`run::run_pipeline`] drives the stages with checkpoints so an
//! interrupted run resumes where it stopped. Every number that reaches the
//! deck or narration is taken from the report ([`numbers`]).

pub mod analysis;
pub mod client;
pub mod correct;
pub mod narration;
pub mod numbers;
pub mod offline;
pub mod prompts;
pub mod record;
pub mod run;
pub mod slides;
pub mod summarize;

use std::io::Write;
use std::path::Path;

use interviewer_core::llm::LlmError;
use thiserror::Error;

pub use analysis::{AnalysisReport, Percentage, Share};
pub use client::{FixtureClient, HttpClient, HttpConfig, RecordingClient, RetryPolicy};
pub use offline::OfflineModel;
pub use prompts::{PromptSet, Stage};
pub use record::StructuredRecord;
pub use run::{planned_run_id, run_from_records, run_pipeline, PipelineConfig, PipelineError, RunManifest, RunOutcome};
pub use slides::{DeckMeta, SlideDeckSpec};

/// Why a single stage call produced no output.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageFailure {
    #[error(transparent)]
    Model(LlmError),
    #[error("model output failed validation: {0}")]
    Invalid(String),
    #[error("{0}")]
    Precondition(String),
}

/// What every stage needs besides its input.
#[derive(Debug, Clone)]
pub struct StageSettings {
    pub prompts: PromptSet,
    pub retry: RetryPolicy,
    /// Used by the analysis, slide and narration stages; correction and
    /// summarization always run at temperature 0.
    pub creative_temperature: f32,
}

impl Default for StageSettings {
    fn default() -> Self {
        Self {
            prompts: PromptSet::builtin(),
            retry: RetryPolicy::default(),
            creative_temperature: 0.7,
        }
    }
}

/// Write `bytes` to `path` through a temporary file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
