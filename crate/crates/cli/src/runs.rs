//! `pipeline run`, `report show` and `slides render`.

use std::io::Write;
use std::path::{Path, PathBuf};

use interviewer_core::transcript::SessionFilter;
use interviewer_core::{InterviewScript, TranscriptStore};
use interviewer_pipeline::analysis::AnalysisReport;
use interviewer_core::llm::LanguageModelClient;
use interviewer_pipeline::record::parse_record;
use interviewer_pipeline::run::{read_manifest, run_dir, REPORT_FILE, DECK_FILE, NARRATION_FILE};
use interviewer_pipeline::slides::{parse_deck, render_deck, DeckMeta};
use interviewer_pipeline::{
    run_from_records, run_pipeline, HttpClient, HttpConfig, OfflineModel, PipelineConfig, PipelineError, PromptSet,
    Stage, StageFailure,
};

use crate::CliError;

pub enum Inputs {
    /// Session ids, or every finalized session when `None`.
    Sessions(Option<Vec<String>>),
    Records(PathBuf),
}

pub struct RunOptions {
    pub inputs: Inputs,
    pub live: bool,
    pub prompts: Option<PathBuf>,
    pub stop_after: Option<Stage>,
    pub meta: DeckMeta,
    pub queries: Vec<String>,
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let message = e.to_string();
        match e {
            PipelineError::Io { .. } => CliError::runtime(message),
            PipelineError::Stage {
                source: StageFailure::Precondition(_),
                ..
            } => CliError::data(message),
            PipelineError::Stage { .. } => CliError::runtime(message),
            _ => CliError::data(message),
        }
    }
}

fn load_records(path: &Path, script: &InterviewScript) -> Result<Vec<interviewer_pipeline::StructuredRecord>, CliError> {
    let bad = |m: String| CliError::data(format!("{}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let values: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let theme_ids: Vec<String> = script.themes().map(|t| t.id.clone()).collect();
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let id = v["session_id"]
                .as_str()
                .ok_or_else(|| bad(format!("record {i} has no session_id")))?;
            parse_record(v, id, &theme_ids).map_err(|e| bad(format!("record {id}: {e}")))
        })
        .collect()
}

pub fn pipeline_run(
    runs_dir: &Path,
    store: &TranscriptStore,
    script: &InterviewScript,
    opts: RunOptions,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (client, model_id): (Box<dyn LanguageModelClient>, String) = if opts.live {
        let config = HttpConfig::from_env().map_err(CliError::usage)?;
        let id = config.model.clone();
        (Box::new(HttpClient::new(config)), id)
    } else {
        (Box::new(OfflineModel::new(std::sync::Arc::new(script.clone()))), "offline".into())
    };
    let mut config = PipelineConfig::new(runs_dir, model_id);
    if let Some(dir) = &opts.prompts {
        config.settings.prompts =
            PromptSet::from_dir(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    }
    config.stop_after = opts.stop_after;
    config.meta = opts.meta;
    config.extra_queries = opts.queries;

    let result = match opts.inputs {
        Inputs::Records(path) => run_from_records(load_records(&path, script)?, script, &config, client.as_ref()),
        Inputs::Sessions(ids) => {
            let ids = match ids {
                Some(ids) => ids,
                None => store
                    .list_sessions(&SessionFilter::default())
                    .map_err(|e| CliError::runtime(e.to_string()))?
                    .into_iter()
                    .filter(|id| store.load(id).is_ok_and(|t| t.is_finalized()))
                    .collect(),
            };
            let mut transcripts = Vec::with_capacity(ids.len());
            for id in &ids {
                let t = store.load(id).map_err(CliError::from_store)?;
                if t.script_id != script.id {
                    return Err(CliError::data(format!(
                        "session {id} used script `{}`, not `{}`",
                        t.script_id, script.id
                    )));
                }
                transcripts.push(t);
            }
            run_pipeline(transcripts, script, &config, client.as_ref())
        }
    };
    match result {
        Ok(outcome) => {
            let dir = outcome.dir.display();
            writeln!(out, "run {} complete", outcome.run_id).map_err(CliError::io)?;
            for file in [REPORT_FILE, DECK_FILE, NARRATION_FILE] {
                writeln!(out, "  {dir}/{file}").map_err(CliError::io)?;
            }
            Ok(())
        }
        Err(PipelineError::Stopped { run_id, after }) => {
            writeln!(out, "run {run_id} stopped after {after}; run again to resume").map_err(CliError::io)?;
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

fn read_artifact(runs_dir: &Path, run_id: &str, file: &str) -> Result<String, CliError> {
    let path = run_dir(runs_dir, run_id)?.join(file);
    if !path.is_file() {
        let manifest = read_manifest(runs_dir, run_id)?;
        let done: Vec<&str> = manifest.completed.iter().map(|s| s.name()).collect();
        return Err(CliError::data(format!(
            "run {run_id} has no {file} yet (completed: {})",
            if done.is_empty() { "nothing".to_string() } else { done.join(", ") }
        )));
    }
    std::fs::read_to_string(&path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn format_report(report: &AnalysisReport) -> String {
    let mut s = format!("Sessions: {}\n\nOverall interview experience\n", report.n_sessions);
    for share in &report.distribution {
        s += &format!("  {:<10} {:>6}%  ({})\n", share.label, share.percentage, share.count);
        if let Some(reasons) = report.top_reasons.get(&share.category) {
            for r in reasons {
                s += &format!("      - {r}\n");
            }
        }
    }
    for theme in &report.per_theme {
        s += &format!("\n{}\n", theme.label);
        for share in &theme.stance {
            s += &format!("  {:<10} {:>6}%  ({})\n", share.label, share.percentage, share.count);
        }
        for m in &theme.motivation_clusters {
            s += &format!("      - {m}\n");
        }
    }
    for f in &report.additional_queries {
        s += &format!("\nQ: {}\nA: {}\n", f.query, f.finding);
    }
    s
}

pub fn report_show(runs_dir: &Path, run_id: &str, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read_artifact(runs_dir, run_id, REPORT_FILE)?;
    let rendered = if json {
        text
    } else {
        let report: AnalysisReport =
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("run {run_id}: report: {e}")))?;
        format_report(&report)
    };
    out.write_all(rendered.as_bytes()).map_err(CliError::io)
}

pub fn slides_render(
    runs_dir: &Path,
    run_id: &str,
    narration: bool,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let text = if narration {
        read_artifact(runs_dir, run_id, NARRATION_FILE)?
    } else {
        let deck = read_artifact(runs_dir, run_id, DECK_FILE)?;
        let spec = parse_deck(&deck).map_err(|e| CliError::data(format!("run {run_id}: deck: {e}")))?;
        render_deck(&spec)
    };
    match dest {
        Some(path) => {
            interviewer_pipeline::write_atomic(path, text.as_bytes())
                .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
            writeln!(out, "wrote {}", path.display()).map_err(CliError::io)
        }
        None => out.write_all(text.as_bytes()).map_err(CliError::io),
    }
}
