//! Checkpointed execution of the five stages.
//!
//! A run lives in `<runs_dir>/<run_id>/`. The run id is a hash of every
//! input that affects the output, so re-running the same inputs lands in
//! the same directory and skips whatever already has a checkpoint:
//!
//! ```text
//! manifest.json
//! checkpoints/01_correct/<session>.json
//! checkpoints/02_summarize/<session>.json
//! checkpoints/03_analyze.json
//! checkpoints/04_slides.json
//! checkpoints/05_script.json
//! report.json  deck.md  narration.txt
//! ```

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use interviewer_core::llm::LanguageModelClient;
use interviewer_core::{InterviewScript, SessionTranscript};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::analysis::{analyze, AnalysisReport};
use crate::correct::{correct_transcript, CorrectedSession};
use crate::narration::{generate_presentation_script, render_narration, PresentationScript, DEFAULT_WORD_BUDGET};
use crate::prompts::{sha256_hex, Stage};
use crate::record::StructuredRecord;
use crate::slides::{generate_slide_content, render_deck, DeckMeta, SlideDeckSpec, DEFAULT_SLIDE_BOUNDS};
use crate::summarize::summarize_to_records;
use crate::{write_atomic, StageFailure, StageSettings};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const DECK_FILE: &str = "deck.md";
pub const NARRATION_FILE: &str = "narration.txt";

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub runs_dir: PathBuf,
    pub settings: StageSettings,
    pub slide_bounds: RangeInclusive<usize>,
    pub word_budget: usize,
    pub meta: DeckMeta,
    /// Free-form questions answered during analysis.
    pub extra_queries: Vec<String>,
    /// Identifies the model; part of the run id.
    pub model_id: String,
    /// Stop once this stage is checkpointed.
    pub stop_after: Option<Stage>,
}

impl PipelineConfig {
    pub fn new(runs_dir: impl Into<PathBuf>, model_id: impl Into<String>) -> Self {
        Self {
            runs_dir: runs_dir.into(),
            settings: StageSettings::default(),
            slide_bounds: DEFAULT_SLIDE_BOUNDS,
            word_budget: DEFAULT_WORD_BUDGET,
            meta: DeckMeta::default(),
            extra_queries: Vec::new(),
            model_id: model_id.into(),
            stop_after: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInput {
    pub session_id: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Transcripts,
    Records,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub script_id: String,
    pub model_id: String,
    pub input: InputKind,
    pub sessions: Vec<SessionInput>,
    pub prompt_hashes: BTreeMap<String, String>,
    pub creative_temperature: f32,
    pub word_budget: usize,
    pub slide_bounds: [usize; 2],
    pub queries: Vec<String>,
    pub meta: DeckMeta,
    /// Stages whose checkpoints are complete, in order.
    pub completed: Vec<Stage>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub dir: PathBuf,
    pub report: AnalysisReport,
    pub deck: SlideDeckSpec,
    pub narration: PresentationScript,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no sessions to process")]
    NoSessions,
    #[error("session {0} is not finalized")]
    NotFinalized(String),
    #[error("session {0} appears more than once")]
    DuplicateSession(String),
    #[error("stage `{stage}` failed{}; completed work is checkpointed in {}: {source}",
        .session_id.as_ref().map(|s| format!(" for session {s}")).unwrap_or_default(),
        .checkpoint.display())]
    Stage {
        stage: Stage,
        session_id: Option<String>,
        checkpoint: PathBuf,
        source: StageFailure,
    },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: unreadable checkpoint: {reason}", .path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error("run {run_id} stopped after stage `{after}` as requested")]
    Stopped { run_id: String, after: Stage },
    #[error("no run {0}")]
    UnknownRun(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Run ids are 16 lowercase hex characters.
pub fn is_valid_run_id(id: &str) -> bool {
    id.len() == 16 && id.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

pub fn run_dir(runs_dir: &Path, run_id: &str) -> Result<PathBuf, PipelineError> {
    let dir = runs_dir.join(run_id);
    if !is_valid_run_id(run_id) || !dir.join(MANIFEST_FILE).is_file() {
        return Err(PipelineError::UnknownRun(run_id.to_string()));
    }
    Ok(dir)
}

pub fn read_manifest(runs_dir: &Path, run_id: &str) -> Result<RunManifest, PipelineError> {
    read_json(&run_dir(runs_dir, run_id)?.join(MANIFEST_FILE))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Corrupt {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("pipeline values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(io_err(path))
}

/// Load the checkpoint at `path`, or produce and store it.
fn checkpointed<T: Serialize + DeserializeOwned>(
    path: &Path,
    produce: impl FnOnce() -> Result<T, StageFailure>,
    on_failure: impl FnOnce(StageFailure) -> PipelineError,
) -> Result<T, PipelineError> {
    if path.is_file() {
        tracing::debug!(path = %path.display(), "reusing checkpoint");
        return read_json(path);
    }
    let value = produce().map_err(on_failure)?;
    write_json(path, &value)?;
    Ok(value)
}

struct Run<'a> {
    dir: PathBuf,
    manifest: RunManifest,
    config: &'a PipelineConfig,
    client: &'a dyn LanguageModelClient,
}

impl Run<'_> {
    fn checkpoint_path(&self, stage: Stage) -> PathBuf {
        let dir = self.dir.join("checkpoints");
        if stage.is_per_session() {
            dir.join(stage.file_stem())
        } else {
            dir.join(format!("{}.json", stage.file_stem()))
        }
    }

    fn failure(&self, stage: Stage, session_id: Option<&str>) -> impl FnOnce(StageFailure) -> PipelineError {
        let checkpoint = self.checkpoint_path(stage);
        let session_id = session_id.map(str::to_string);
        move |source| PipelineError::Stage {
            stage,
            session_id,
            checkpoint,
            source,
        }
    }

    /// Record `stage` as done and honour `stop_after`.
    fn finish(&mut self, stage: Stage) -> Result<(), PipelineError> {
        if !self.manifest.completed.contains(&stage) {
            self.manifest.completed.push(stage);
            write_json(&self.dir.join(MANIFEST_FILE), &self.manifest)?;
        }
        tracing::info!(run = %self.manifest.run_id, %stage, "stage complete");
        if self.config.stop_after == Some(stage) {
            return Err(PipelineError::Stopped {
                run_id: self.manifest.run_id.clone(),
                after: stage,
            });
        }
        Ok(())
    }

    /// Run a per-session stage over `items` in parallel. Sessions that
    /// succeed keep their checkpoints even if another one fails.
    fn per_session<I: Sync, O: Serialize + DeserializeOwned + Send>(
        &mut self,
        stage: Stage,
        items: &[(String, I)],
        produce: impl Fn(&I) -> Result<O, StageFailure> + Sync,
    ) -> Result<Vec<O>, PipelineError> {
        let dir = self.checkpoint_path(stage);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let this = &*self;
        let results: Vec<Result<O, PipelineError>> = items
            .par_iter()
            .map(|(sid, item)| {
                checkpointed(&dir.join(format!("{sid}.json")), || produce(item), this.failure(stage, Some(sid)))
            })
            .collect();
        let out = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        self.finish(stage)?;
        Ok(out)
    }

    fn finish_from_records(mut self, records: Vec<StructuredRecord>, script: &InterviewScript) -> Result<RunOutcome, PipelineError> {
        let config = self.config;
        let settings = &config.settings;
        let client = self.client;

        let report: AnalysisReport = checkpointed(
            &self.checkpoint_path(Stage::Analyze),
            || analyze(&records, script, &config.extra_queries, client, settings),
            self.failure(Stage::Analyze, None),
        )?;
        self.finish(Stage::Analyze)?;

        let deck: SlideDeckSpec = checkpointed(
            &self.checkpoint_path(Stage::Slides),
            || generate_slide_content(&report, &config.meta, config.slide_bounds.clone(), client, settings),
            self.failure(Stage::Slides, None),
        )?;
        self.finish(Stage::Slides)?;

        let narration: PresentationScript = checkpointed(
            &self.checkpoint_path(Stage::Script),
            || generate_presentation_script(&report, &deck, config.word_budget, client, settings),
            self.failure(Stage::Script, None),
        )?;
        self.finish(Stage::Script)?;

        write_json(&self.dir.join(REPORT_FILE), &report)?;
        let deck_path = self.dir.join(DECK_FILE);
        write_atomic(&deck_path, render_deck(&deck).as_bytes()).map_err(io_err(&deck_path))?;
        let narration_path = self.dir.join(NARRATION_FILE);
        write_atomic(&narration_path, render_narration(&deck, &narration).as_bytes())
            .map_err(io_err(&narration_path))?;
        Ok(RunOutcome {
            run_id: self.manifest.run_id,
            dir: self.dir,
            report,
            deck,
            narration,
        })
    }
}

fn prompt_hashes(config: &PipelineConfig) -> BTreeMap<String, String> {
    Stage::ALL
        .iter()
        .map(|s| (s.name().to_string(), config.settings.prompts.hash(*s)))
        .collect()
}

fn compute_run_id(script: &InterviewScript, input: InputKind, sessions: &[SessionInput], config: &PipelineConfig) -> String {
    let themes: Vec<(&str, &str)> = script.themes().map(|t| (t.id.as_str(), t.display_label())).collect();
    let identity = json!({
        "script": {"id": script.id, "themes": themes},
        "model": config.model_id,
        "input": input,
        "sessions": sessions,
        "prompts": prompt_hashes(config),
        "creative_temperature": config.settings.creative_temperature,
        "word_budget": config.word_budget,
        "slide_bounds": [config.slide_bounds.start(), config.slide_bounds.end()],
        "queries": config.extra_queries,
        "meta": config.meta,
    });
    sha256_hex(identity.to_string().as_bytes())[..16].to_string()
}

fn open_run<'a>(
    script: &InterviewScript,
    input: InputKind,
    sessions: Vec<SessionInput>,
    config: &'a PipelineConfig,
    client: &'a dyn LanguageModelClient,
) -> Result<Run<'a>, PipelineError> {
    let run_id = compute_run_id(script, input, &sessions, config);
    let prompt_hashes = prompt_hashes(config);
    let dir = config.runs_dir.join(&run_id);
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = if manifest_path.is_file() {
        read_json(&manifest_path)?
    } else {
        let manifest = RunManifest {
            run_id: run_id.clone(),
            script_id: script.id.clone(),
            model_id: config.model_id.clone(),
            input,
            sessions,
            prompt_hashes,
            creative_temperature: config.settings.creative_temperature,
            word_budget: config.word_budget,
            slide_bounds: [*config.slide_bounds.start(), *config.slide_bounds.end()],
            queries: config.extra_queries.clone(),
            meta: config.meta.clone(),
            completed: Vec::new(),
        };
        write_json(&manifest_path, &manifest)?;
        manifest
    };
    tracing::info!(run = %run_id, dir = %dir.display(), "pipeline run");
    Ok(Run {
        dir,
        manifest,
        config,
        client,
    })
}

fn sorted_unique<T>(mut items: Vec<T>, id: impl Fn(&T) -> &str) -> Result<Vec<T>, PipelineError> {
    if items.is_empty() {
        return Err(PipelineError::NoSessions);
    }
    items.sort_by(|a, b| id(a).cmp(id(b)));
    if let Some(w) = items.windows(2).find(|w| id(&w[0]) == id(&w[1])) {
        return Err(PipelineError::DuplicateSession(id(&w[0]).to_string()));
    }
    Ok(items)
}

fn transcript_inputs(transcripts: Vec<SessionTranscript>) -> Result<(Vec<SessionTranscript>, Vec<SessionInput>), PipelineError> {
    let transcripts = sorted_unique(transcripts, |t| &t.session_id)?;
    if let Some(t) = transcripts.iter().find(|t| !t.is_finalized()) {
        return Err(PipelineError::NotFinalized(t.session_id.clone()));
    }
    let sessions = transcripts
        .iter()
        .map(|t| SessionInput {
            session_id: t.session_id.clone(),
            sha256: sha256_hex(t.to_json().as_bytes()),
        })
        .collect();
    Ok((transcripts, sessions))
}

/// The id [`run_pipeline`] will use for these inputs.
pub fn planned_run_id(
    transcripts: &[SessionTranscript],
    script: &InterviewScript,
    config: &PipelineConfig,
) -> Result<String, PipelineError> {
    let (_, sessions) = transcript_inputs(transcripts.to_vec())?;
    Ok(compute_run_id(script, InputKind::Transcripts, &sessions, config))
}

/// Run all stages over finalized transcripts.
pub fn run_pipeline(
    transcripts: Vec<SessionTranscript>,
    script: &InterviewScript,
    config: &PipelineConfig,
    client: &dyn LanguageModelClient,
) -> Result<RunOutcome, PipelineError> {
    let (transcripts, sessions) = transcript_inputs(transcripts)?;
    let mut run = open_run(script, InputKind::Transcripts, sessions, config, client)?;
    let settings = &config.settings;

    let items: Vec<(String, SessionTranscript)> =
        transcripts.into_iter().map(|t| (t.session_id.clone(), t)).collect();
    let corrected: Vec<CorrectedSession> =
        run.per_session(Stage::Correct, &items, |t| correct_transcript(t, client, settings))?;

    let items: Vec<(String, CorrectedSession)> =
        corrected.into_iter().map(|c| (c.session_id.clone(), c)).collect();
    let records: Vec<StructuredRecord> =
        run.per_session(Stage::Summarize, &items, |c| summarize_to_records(c, script, client, settings))?;

    run.finish_from_records(records, script)
}

/// Run the analysis, slide and narration stages over records that were
/// coded elsewhere.
pub fn run_from_records(
    records: Vec<StructuredRecord>,
    script: &InterviewScript,
    config: &PipelineConfig,
    client: &dyn LanguageModelClient,
) -> Result<RunOutcome, PipelineError> {
    let records = sorted_unique(records, |r| &r.session_id)?;
    let sessions = records
        .iter()
        .map(|r| SessionInput {
            session_id: r.session_id.clone(),
            sha256: sha256_hex(serde_json::to_string(r).unwrap().as_bytes()),
        })
        .collect();
    let run = open_run(script, InputKind::Records, sessions, config, client)?;
    run.finish_from_records(records, script)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_ids_are_validated() {
        assert!(is_valid_run_id("0123456789abcdef"));
        assert!(!is_valid_run_id("../etc/passwd"));
        assert!(!is_valid_run_id("0123456789ABCDEF"));
    }
}
