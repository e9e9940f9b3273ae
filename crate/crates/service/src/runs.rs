//! Pipeline runs started over HTTP, executed on the blocking pool.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use interviewer_core::llm::LanguageModelClient;
use interviewer_core::{InterviewScript, SessionTranscript};
use interviewer_pipeline::run::{read_manifest, DECK_FILE, NARRATION_FILE, REPORT_FILE};
use interviewer_pipeline::{planned_run_id, run_pipeline, HttpClient, HttpConfig, OfflineModel, PipelineConfig, Stage};
use serde::Serialize;

use crate::config::PipelineModelSetting;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Running,
    Succeeded,
    Failed,
    /// Found on disk without all stages complete and not running here.
    Interrupted,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunStatus {
    pub run_id: String,
    pub state: RunState,
    pub completed: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<Artifacts>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifacts {
    pub report: String,
    pub deck: String,
    pub narration: String,
}

/// How pipeline stages reach a model.
pub enum PipelineModel {
    Offline,
    Live(HttpConfig),
}

impl PipelineModel {
    pub fn from_setting(setting: PipelineModelSetting) -> Result<Self, String> {
        match setting {
            PipelineModelSetting::Mock => Ok(PipelineModel::Offline),
            PipelineModelSetting::Live => HttpConfig::from_env().map(PipelineModel::Live),
        }
    }

    fn model_id(&self) -> String {
        match self {
            PipelineModel::Offline => "offline".into(),
            PipelineModel::Live(c) => c.model.clone(),
        }
    }

    fn client(&self, script: &Arc<InterviewScript>) -> Box<dyn LanguageModelClient> {
        match self {
            PipelineModel::Offline => Box::new(OfflineModel::new(script.clone())),
            PipelineModel::Live(c) => Box::new(HttpClient::new(c.clone())),
        }
    }
}

pub struct RunRegistry {
    runs_dir: PathBuf,
    model: PipelineModel,
    active: Mutex<HashMap<String, (RunState, Option<String>)>>,
}

impl RunRegistry {
    pub fn new(runs_dir: PathBuf, model: PipelineModel) -> Self {
        Self {
            runs_dir,
            model,
            active: Mutex::new(HashMap::new()),
        }
    }

    fn config(&self) -> PipelineConfig {
        PipelineConfig::new(&self.runs_dir, self.model.model_id())
    }

    /// Start (or join) the run for these transcripts; returns its id.
    #[allow(clippy::result_large_err)]
    pub fn start(
        self: &Arc<Self>,
        transcripts: Vec<SessionTranscript>,
        script: Arc<InterviewScript>,
    ) -> Result<String, interviewer_pipeline::PipelineError> {
        let config = self.config();
        let run_id = planned_run_id(&transcripts, &script, &config)?;
        {
            let mut active = self.active.lock().unwrap();
            if matches!(active.get(&run_id), Some((RunState::Running, _))) {
                return Ok(run_id);
            }
            active.insert(run_id.clone(), (RunState::Running, None));
        }
        let registry = self.clone();
        let id = run_id.clone();
        tokio::task::spawn_blocking(move || {
            let client = registry.model.client(&script);
            let result = run_pipeline(transcripts, &script, &config, client.as_ref());
            let entry = match result {
                Ok(_) => (RunState::Succeeded, None),
                Err(e) => {
                    tracing::error!(run = %id, error = %e, "pipeline run failed");
                    (RunState::Failed, Some(e.to_string()))
                }
            };
            registry.active.lock().unwrap().insert(id, entry);
        });
        Ok(run_id)
    }

    pub fn status(&self, run_id: &str) -> Option<RunStatus> {
        let known = self.active.lock().unwrap().get(run_id).cloned();
        let manifest = read_manifest(&self.runs_dir, run_id).ok();
        if known.is_none() && manifest.is_none() {
            return None;
        }
        let completed = manifest.map(|m| m.completed).unwrap_or_default();
        let all_done = Stage::ALL.iter().all(|s| completed.contains(s));
        let (state, error) = known.unwrap_or(if all_done {
            (RunState::Succeeded, None)
        } else {
            (RunState::Interrupted, None)
        });
        let artifacts = (state == RunState::Succeeded).then(|| {
            let dir = self.runs_dir.join(run_id);
            Artifacts {
                report: dir.join(REPORT_FILE).display().to_string(),
                deck: dir.join(DECK_FILE).display().to_string(),
                narration: dir.join(NARRATION_FILE).display().to_string(),
            }
        });
        Some(RunStatus {
            run_id: run_id.to_string(),
            state,
            completed,
            error,
            artifacts,
        })
    }
}
