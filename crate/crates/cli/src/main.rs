use std::io::IsTerminal;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use pathagent_core::agent::{AgentConfig, Mode};
use pathagent_core::model::{ModelAdapter, ModelConfig, ReplayAdapter, WireAdapter};
use pathagent_core::runner::{AdapterSpec, RunConfig, Runner, DEFAULT_SEED, DEFAULT_TRIALS, REPORT_FILE};
use pathagent_core::tools::{full_registry, web_search_stub, FixtureStore};
use pathagent_service::{AdapterFactory, ServiceConfig, SessionStore, DEFAULT_IDLE_TTL};

#[derive(Parser)]
#[command(name = "pathagent", version, about = "Histopathology analysis agent: benchmark runner and session service")]
struct Cli {
    /// error, warn, info, debug or trace; logs go to stderr.
    #[arg(long, global = true, default_value = "info")]
    log_level: tracing::Level,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a question suite and write report.json plus per-run logs.
    Run(RunArgs),
    /// Serve interactive sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    suite: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    mode: Mode,
    /// `wire` (credentials from PATHAGENT_ENDPOINT, PATHAGENT_MODEL, PATHAGENT_API_KEY) or `replay:DIR`.
    #[arg(long)]
    adapter: AdapterSpec,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long = "parallel", default_value_t = 1)]
    parallel: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Recorded tool outputs backing the model-dependent tools.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Base for metadata paths in prompts; defaults to the dataset.
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Wall-clock budget per question, in seconds.
    #[arg(long)]
    budget_secs: Option<u64>,
    /// Record zero durations so reruns produce identical files.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8700")]
    addr: SocketAddr,
    #[arg(long)]
    data_dir: PathBuf,
    /// Shared bearer token. Without one the service accepts any client.
    #[arg(long, env = "PATHAGENT_SERVICE_TOKEN", hide_env_values = true)]
    token: Option<String>,
    /// `wire` or `replay:FILE`, a recorded step list shared by every session.
    #[arg(long, default_value = "wire")]
    adapter: String,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    fixtures: Option<PathBuf>,
    /// Idle seconds before a session is closed and archived.
    #[arg(long, default_value_t = DEFAULT_IDLE_TTL.as_secs())]
    idle_ttl: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_max_level(cli.log_level)
        .with_ansi(std::io::stderr().is_terminal())
        .with_writer(std::io::stderr)
        .init();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: RunArgs) -> Result<ExitCode, String> {
    let mut config = RunConfig::new(args.suite, args.dataset, &args.out, args.mode, args.adapter);
    config.trials = args.trials;
    config.parallelism = args.parallel;
    config.seed = args.seed;
    config.fixtures = args.fixtures;
    config.metadata_root = args.metadata;
    config.record_timings = !args.no_timings;
    if let Some(n) = args.max_steps {
        config.max_steps = n;
    }
    if let Some(s) = args.budget_secs {
        config.question_budget = Duration::from_secs(s);
    }
    let runner = Runner::prepare(config).map_err(|e| e.to_string())?;
    let report = runner.run_benchmark().map_err(|e| e.to_string())?;
    let overall = &report.report.overall;
    println!("{}", serde_json::json!({
        "report": args.out.join(REPORT_FILE),
        "mode": report.mode,
        "runs": report.report.question_count,
        "mean": overall.mean,
        "std_error": overall.std_error,
        "incomplete_runs": report.incomplete_runs.len(),
    }));
    for r in &report.incomplete_runs {
        tracing::warn!(trial = r.trial, question = %r.question_id, reason = %r.reason, "run did not complete");
    }
    Ok(if report.all_completed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn adapter_factory(spec: &str) -> Result<AdapterFactory, String> {
    if spec == "wire" {
        let config = ModelConfig::from_env()?;
        return Ok(Arc::new(move |_wd: &Path| {
            let a = WireAdapter::new(config.clone()).map_err(|e| e.to_string())?;
            Ok(Box::new(a) as Box<dyn ModelAdapter>)
        }));
    }
    let Some(file) = spec.strip_prefix("replay:") else {
        return Err(format!("adapter must be 'wire' or 'replay:FILE', got '{spec}'"));
    };
    let template = ReplayAdapter::from_file(Path::new(file)).map_err(|e| e.to_string())?;
    Ok(Arc::new(move |wd: &Path| {
        let a = template.clone().with_substitutions([("working_dir".to_string(), wd.display().to_string())]);
        Ok(Box::new(a) as Box<dyn ModelAdapter>)
    }))
}

fn serve(args: ServeArgs) -> Result<ExitCode, String> {
    let mut agent = AgentConfig::case_study();
    let mut store = None;
    if let Some(dataset) = &args.dataset {
        let root = dataset.canonicalize().map_err(|e| format!("dataset {}: {e}", dataset.display()))?;
        agent.limits.read_roots = vec![root.clone()];
        agent.redactions = vec![(root.clone(), "{dataset_root}".into())];
        if let Some(dir) = &args.fixtures {
            store = Some(Arc::new(FixtureStore::open(dir, &root).map_err(|e| e.to_string())?));
        }
    }
    let mut registry = full_registry(store);
    registry.register(web_search_stub()).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&args.data_dir).map_err(|e| format!("data dir {}: {e}", args.data_dir.display()))?;
    let config = ServiceConfig {
        data_dir: args.data_dir.canonicalize().map_err(|e| e.to_string())?,
        token: args.token,
        idle_ttl: Duration::from_secs(args.idle_ttl),
        agent,
        registry: Arc::new(registry),
        adapter: adapter_factory(&args.adapter)?,
    };
    tracing::info!(?config, addr = %args.addr, "starting session service");
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.addr).await.map_err(|e| format!("bind {}: {e}", args.addr))?;
        pathagent_service::serve(listener, Arc::new(SessionStore::new(config))).await.map_err(|e| e.to_string())
    })?;
    Ok(ExitCode::SUCCESS)
}
