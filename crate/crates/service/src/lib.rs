//! Network-facing session service.
//!
//! Endpoints:
//!
//! - `POST /sessions` starts an interview: `{"script_id", "agent_profile"?, "date"?}`.
//! - `GET /sessions/{id}/stream?after_seq=N` is the WebSocket stream. It
//!   delivers every transcript event after `N` in seq order, then live
//!   events, heartbeats and a final `interview_complete`. Client messages
//!   sent on it are applied like `POST /sessions/{id}/events`.
//! - `POST /sessions/{id}/events` applies one client message and returns
//!   the events it caused.
//! - `GET /sessions/{id}/transcript` serves the stored transcript as is.
//! - `POST /pipeline/runs` with `{"sessions": [ids] | "all"}` starts the
//!   post-interview pipeline; `GET /pipeline/runs/{id}` reports progress.
//! - `GET /healthz`.

pub mod config;
pub mod routes;
pub mod runs;
pub mod sessions;
pub mod wire;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use interviewer_core::followup::FollowupMode;
use interviewer_core::transcript::TranscriptStore;
use interviewer_core::InterviewScript;
use interviewer_pipeline::{HttpClient, HttpConfig};
use thiserror::Error;
use tokio::net::TcpListener;

pub use config::ServiceConfig;
use config::FollowupSetting;
use runs::{PipelineModel, RunRegistry};
use sessions::SessionRegistry;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("script {}: {message}", .path.display())]
    Script { path: std::path::PathBuf, message: String },
    #[error("no interview scripts available")]
    NoScripts,
    #[error("duplicate script id `{0}`")]
    DuplicateScript(String),
    #[error("data dir: {0}")]
    Store(#[from] interviewer_core::transcript::StoreError),
    #[error("model settings: {0}")]
    Model(String),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
}

#[derive(Clone)]
pub struct AppState {
    pub config: Arc<ServiceConfig>,
    pub sessions: Arc<SessionRegistry>,
    pub runs: Arc<RunRegistry>,
}

fn load_scripts(config: &ServiceConfig) -> Result<HashMap<String, Arc<InterviewScript>>, StartupError> {
    let mut scripts = HashMap::new();
    if config.builtin_script {
        let s = InterviewScript::default_script();
        scripts.insert(s.id.clone(), Arc::new(s));
    }
    let mut paths: Vec<_> = std::fs::read_dir(&config.script_dir)
        .map_err(|e| StartupError::Script {
            path: config.script_dir.clone(),
            message: e.to_string(),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let builtin_id = scripts.keys().next().cloned();
    for path in paths {
        let script = InterviewScript::load(&path).map_err(|e| StartupError::Script {
            path: path.clone(),
            message: e.to_string(),
        })?;
        // a copy of the shipped script may sit in the directory; the file wins
        if scripts.contains_key(&script.id) && builtin_id.as_deref() != Some(script.id.as_str()) {
            return Err(StartupError::DuplicateScript(script.id));
        }
        scripts.insert(script.id.clone(), Arc::new(script));
    }
    if scripts.is_empty() {
        return Err(StartupError::NoScripts);
    }
    Ok(scripts)
}

/// Validate `config` and build the shared state.
pub fn build_state(config: ServiceConfig) -> Result<AppState, StartupError> {
    config.validate()?;
    let scripts = load_scripts(&config)?;
    let store = TranscriptStore::open(config.sessions_dir())?;
    let followups = match config.llm.followups {
        FollowupSetting::Template => FollowupMode::Template,
        FollowupSetting::Generative => {
            let http = HttpConfig::from_env().map_err(StartupError::Model)?;
            FollowupMode::Generative(Arc::new(HttpClient::new(http)))
        }
    };
    let model = PipelineModel::from_setting(config.llm.pipeline).map_err(StartupError::Model)?;
    std::fs::create_dir_all(config.runs_dir()).map_err(|e| {
        StartupError::Store(interviewer_core::transcript::StoreError::Io {
            path: config.runs_dir(),
            source: e,
        })
    })?;
    let sessions = Arc::new(SessionRegistry::new(scripts, store, followups, config.timing.clone()));
    let runs = Arc::new(RunRegistry::new(config.runs_dir(), model));
    Ok(AppState {
        config: Arc::new(config),
        sessions,
        runs,
    })
}

/// Bind the configured address.
pub async fn bind(config: &ServiceConfig) -> Result<TcpListener, StartupError> {
    let addr = format!("{}:{}", config.bind, config.port);
    TcpListener::bind(&addr)
        .await
        .map_err(|source| StartupError::Bind { addr, source })
}

/// A bound, ready-to-serve service.
pub struct Server {
    listener: TcpListener,
    state: AppState,
}

impl Server {
    pub async fn start(config: ServiceConfig) -> Result<Self, StartupError> {
        let state = build_state(config)?;
        let listener = bind(&state.config).await?;
        Ok(Self { listener, state })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn state(&self) -> &AppState {
        &self.state
    }

    /// Serve until `shutdown` resolves; live sessions are then closed as
    /// incomplete.
    pub async fn run(self, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
        tracing::info!(addr = %self.local_addr(), "listening");
        let sessions = self.state.sessions.clone();
        let app = routes::router(self.state);
        axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await?;
        sessions.expire_all().await;
        Ok(())
    }
}
