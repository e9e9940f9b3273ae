//! The `interviewer` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 runtime failure,
//! 3 bad or missing data. Every failure prints one line to stderr.

pub mod interview;
pub mod render;
pub mod runs;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use interviewer_core::transcript::{AgentProfile, StoreError};
use interviewer_core::{InterviewScript, TranscriptStore};
use interviewer_pipeline::slides::DeckMeta;
use interviewer_pipeline::Stage;
use interviewer_service::{Server, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        Self::runtime(e.to_string())
    }

    pub fn from_store(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => Self::runtime(e.to_string()),
            other => Self::data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "interviewer", version, about = "Structured interview agent: interviews, service and report pipeline")]
pub struct Cli {
    /// Where transcripts (sessions/) and pipeline runs (runs/) live.
    #[arg(long, global = true, env = "INTERVIEWER_DATA_DIR", default_value = "interviewer-data")]
    pub data_dir: PathBuf,
    /// Log progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an interview in the terminal, or replay a trace with --simulate.
    Interview(InterviewArgs),
    /// Start the session service.
    Serve {
        #[arg(long, value_parser = non_empty_path)]
        config: PathBuf,
    },
    /// Post-interview pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Inspect pipeline reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Render slide decks and narration.
    #[command(subcommand)]
    Slides(SlidesCommand),
}

#[derive(Debug, Args)]
pub struct InterviewArgs {
    /// Interview script JSON; the built-in script when omitted.
    #[arg(long, value_parser = non_empty_path)]
    pub script: Option<PathBuf>,
    /// Replay this trace file instead of reading answers from stdin.
    #[arg(long, value_parser = non_empty_path)]
    pub simulate: Option<PathBuf>,
    #[arg(long)]
    pub session_id: Option<String>,
    /// Session date, YYYY-MM-DD; today when omitted.
    #[arg(long)]
    pub date: Option<String>,
    #[arg(long, value_enum, default_value_t = Profile::AndroidLike)]
    pub profile: Profile,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Profile {
    AndroidLike,
    HumanoidLike,
}

#[derive(Debug, Subcommand)]
pub enum PipelineCommand {
    /// Process finished sessions into a report, deck and narration.
    Run(PipelineRunArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["sessions", "records"]))]
#[command(group = clap::ArgGroup::new("model").args(["mock", "live"]))]
pub struct PipelineRunArgs {
    /// Comma-separated session ids, or `all` for every finished session.
    #[arg(long, value_delimiter = ',')]
    pub sessions: Option<Vec<String>>,
    /// Start from already coded records (a JSON array) instead of transcripts.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Use the deterministic offline model (default).
    #[arg(long)]
    pub mock: bool,
    /// Use the model endpoint configured in the environment.
    #[arg(long)]
    pub live: bool,
    /// Script the sessions were run with; the built-in script when omitted.
    #[arg(long, value_parser = non_empty_path)]
    pub script: Option<PathBuf>,
    /// Directory of prompt templates overriding the built-in ones.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Checkpoint this stage and stop.
    #[arg(long, value_enum)]
    pub stop_after: Option<StageArg>,
    #[arg(long)]
    pub event_name: Option<String>,
    #[arg(long)]
    pub event_date: Option<String>,
    /// Extra analysis question (repeatable).
    #[arg(long = "query")]
    pub queries: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StageArg {
    Correct,
    Summarize,
    Analyze,
    Slides,
    Script,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::Correct => Stage::Correct,
            StageArg::Summarize => Stage::Summarize,
            StageArg::Analyze => Stage::Analyze,
            StageArg::Slides => Stage::Slides,
            StageArg::Script => Stage::Script,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Print a run's analysis report.
    Show {
        run_id: String,
        /// Print report.json as stored.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum SlidesCommand {
    /// Print a run's slide deck (Marp Markdown).
    Render {
        run_id: String,
        /// Print the narration script instead.
        #[arg(long)]
        narration: bool,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn non_empty_path(s: &str) -> Result<PathBuf, String> {
    if s.trim().is_empty() {
        Err("path must not be empty".into())
    } else {
        Ok(PathBuf::from(s))
    }
}

fn load_script(path: Option<&PathBuf>) -> Result<Arc<InterviewScript>, CliError> {
    match path {
        None => Ok(Arc::new(InterviewScript::default_script())),
        Some(p) => InterviewScript::load(p)
            .map(Arc::new)
            .map_err(|e| CliError::data(format!("{}: {e}", p.display()))),
    }
}

fn today() -> String {
    time::OffsetDateTime::now_utc().date().to_string()
}

fn init_logging(verbose: u8, serving: bool) {
    let default = match (verbose, serving) {
        (0, false) => "warn",
        (0, true) | (1, _) => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn open_store(data_dir: &std::path::Path) -> Result<TranscriptStore, CliError> {
    TranscriptStore::open(data_dir.join("sessions")).map_err(CliError::from_store)
}

fn serve(config_path: &std::path::Path, out: &mut dyn Write) -> Result<(), CliError> {
    let config = ServiceConfig::load(config_path, |k| std::env::var(k).ok()).map_err(|e| CliError::data(e.to_string()))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::io)?;
    runtime.block_on(async {
        let server = Server::start(config).await.map_err(|e| match e {
            interviewer_service::StartupError::Bind { .. } => CliError::runtime(e.to_string()),
            interviewer_service::StartupError::Model(_) => CliError::usage(e.to_string()),
            other => CliError::data(other.to_string()),
        })?;
        writeln!(out, "listening on http://{}", server.local_addr())
            .and_then(|_| out.flush())
            .map_err(CliError::io)?;
        server
            .run(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::io)
    })
}

/// Run a parsed command, writing normal output to `out`.
pub fn run(cli: Cli, input: &mut dyn std::io::BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    init_logging(cli.verbose, matches!(cli.command, Command::Serve { .. }));
    let runs_dir = cli.data_dir.join("runs");
    match cli.command {
        Command::Interview(args) => {
            let script = load_script(args.script.as_ref())?;
            let store = open_store(&cli.data_dir)?;
            let opts = interview::InterviewOptions {
                session_id: args
                    .session_id
                    .unwrap_or_else(|| format!("s_{}", uuid::Uuid::new_v4().simple())),
                profile: match args.profile {
                    Profile::AndroidLike => AgentProfile::AndroidLike,
                    Profile::HumanoidLike => AgentProfile::HumanoidLike,
                },
                date: args.date.unwrap_or_else(today),
                verbose: cli.verbose > 0,
            };
            if !interviewer_core::transcript::is_valid_session_id(&opts.session_id) {
                return Err(CliError::usage(format!("invalid session id `{}`", opts.session_id)));
            }
            match args.simulate {
                Some(path) => {
                    let trace = interview::read_trace(&path)?;
                    interview::run_simulated(script, &trace, &store, &opts, out)?;
                }
                None => {
                    interview::run_interactive(script, &store, &opts, input, out)?;
                }
            }
            Ok(())
        }
        Command::Serve { config } => serve(&config, out),
        Command::Pipeline(PipelineCommand::Run(args)) => {
            let script = load_script(args.script.as_ref())?;
            let store = open_store(&cli.data_dir)?;
            let inputs = match (args.records, args.sessions) {
                (Some(path), _) => runs::Inputs::Records(path),
                (None, Some(ids)) if ids.len() == 1 && ids[0] == "all" => runs::Inputs::Sessions(None),
                (None, Some(ids)) => runs::Inputs::Sessions(Some(ids)),
                (None, None) => unreachable!("clap requires an input"),
            };
            let mut meta = DeckMeta::default();
            if let Some(name) = args.event_name {
                meta.event_name = name;
            }
            meta.date = args.event_date;
            let opts = runs::RunOptions {
                inputs,
                live: args.live,
                prompts: args.prompts,
                stop_after: args.stop_after.map(Stage::from),
                meta,
                queries: args.queries,
            };
            runs::pipeline_run(&runs_dir, &store, &script, opts, out)
        }
        Command::Report(ReportCommand::Show { run_id, json }) => runs::report_show(&runs_dir, &run_id, json, out),
        Command::Slides(SlidesCommand::Render { run_id, narration, out: dest }) => {
            runs::slides_render(&runs_dir, &run_id, narration, dest.as_deref(), out)
        }
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = e.print();
                return EXIT_USAGE;
            }
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
            return EXIT_USAGE;
        }
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    match run(cli, &mut stdin.lock(), &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message.replace('\n', " "));
            e.code
        }
    }
}
