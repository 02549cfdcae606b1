//! Sessions, their runs and the per-run event logs that streams replay.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use pathagent_core::agent::{Agent, AgentConfig, AgentRun, Mode, Termination};
use pathagent_core::model::ModelAdapter;
use pathagent_core::tools::{Category, ToolRegistry};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::watch;

/// Builds the model adapter for a new session, given its working directory.
pub type AdapterFactory = Arc<dyn Fn(&Path) -> Result<Box<dyn ModelAdapter>, String> + Send + Sync>;

pub const DEFAULT_IDLE_TTL: Duration = Duration::from_secs(2 * 60 * 60);

#[derive(Clone)]
pub struct ServiceConfig {
    /// Holds `sessions/<id>` working directories and `archive/<id>` after close.
    pub data_dir: PathBuf,
    /// Shared bearer token; no authentication when unset.
    pub token: Option<String>,
    pub idle_ttl: Duration,
    /// Template for new sessions; overrides from the create request apply on top.
    pub agent: AgentConfig,
    pub registry: Arc<ToolRegistry>,
    pub adapter: AdapterFactory,
}

impl std::fmt::Debug for ServiceConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceConfig")
            .field("data_dir", &self.data_dir)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .field("idle_ttl", &self.idle_ttl)
            .field("mode", &self.agent.mode)
            .field("tools", &self.registry.len())
            .finish()
    }
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionOverrides {
    pub max_steps: Option<usize>,
    pub mode: Option<Mode>,
    pub reset_memory_after_query: Option<bool>,
    pub tool_categories: Option<Vec<Category>>,
    pub special_instructions: Option<String>,
}

impl SessionOverrides {
    pub fn apply(&self, mut cfg: AgentConfig) -> Result<AgentConfig, String> {
        if let Some(n) = self.max_steps {
            if n == 0 {
                return Err("max_steps must be at least 1".into());
            }
            cfg.max_steps = n;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(r) = self.reset_memory_after_query {
            cfg.reset_memory_after_query = r;
        }
        if let Some(c) = &self.tool_categories {
            cfg.tool_categories = Some(c.iter().copied().collect());
        }
        if let Some(s) = &self.special_instructions {
            cfg.special_instructions = s.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Idle,
    Running,
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionError {
    Unknown(String),
    UnknownRun(String),
    Busy(String),
    Closed(String),
    Invalid(String),
    PathEscape(String),
    NotFound(String),
    Internal(String),
}

/// One server-sent event, kept for replay to late subscribers.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamEvent {
    /// 1-based position in the run's event log.
    pub id: u64,
    pub kind: &'static str,
    pub data: String,
}

#[derive(Debug, Default)]
struct RunLog {
    events: Vec<StreamEvent>,
    summary: Option<Value>,
    finished: bool,
}

#[derive(Debug)]
pub struct RunRecord {
    pub id: String,
    pub query: String,
    log: Mutex<RunLog>,
    tx: watch::Sender<usize>,
}

impl RunRecord {
    fn new(id: String, query: String) -> Self {
        Self { id, query, log: Mutex::new(RunLog::default()), tx: watch::channel(0).0 }
    }

    fn push(&self, kind: &'static str, data: String, finish: bool) {
        let mut log = self.log.lock().unwrap();
        let id = log.events.len() as u64 + 1;
        if kind == "summary" {
            log.summary = serde_json::from_str(&data).ok();
        }
        log.events.push(StreamEvent { id, kind, data });
        log.finished |= finish;
        let n = log.events.len();
        drop(log);
        self.tx.send_replace(n);
    }

    /// The event after position `cursor`, or whether the log is complete.
    pub fn next_event(&self, cursor: usize) -> Result<StreamEvent, bool> {
        let log = self.log.lock().unwrap();
        log.events.get(cursor).cloned().ok_or(log.finished)
    }

    pub fn subscribe(&self) -> watch::Receiver<usize> {
        self.tx.subscribe()
    }

    pub fn info(&self) -> Value {
        let log = self.log.lock().unwrap();
        json!({
            "id": self.id,
            "query": self.query,
            "status": if log.finished { "finished" } else { "running" },
            "steps": log.events.iter().filter(|e| e.kind == "step").count(),
            "summary": log.summary,
        })
    }
}

struct SessionState {
    status: SessionStatus,
    runs: Vec<Arc<RunRecord>>,
    last_active: Instant,
    memory_messages: usize,
    archived_to: Option<PathBuf>,
}

pub struct Session {
    pub id: String,
    pub created_at: u64,
    config: AgentConfig,
    working_dir: PathBuf,
    archive_dir: PathBuf,
    agent: Arc<Mutex<Agent>>,
    cancel: Arc<AtomicBool>,
    state: Mutex<SessionState>,
}

impl Session {
    pub fn working_dir(&self) -> &Path {
        &self.working_dir
    }

    pub fn status(&self) -> SessionStatus {
        self.state.lock().unwrap().status
    }

    pub fn info(&self) -> Value {
        let st = self.state.lock().unwrap();
        let c = &self.config;
        json!({
            "id": self.id,
            "status": st.status,
            "created_at": self.created_at,
            "config": {
                "max_steps": c.max_steps,
                "mode": c.mode,
                "reset_memory_after_query": c.reset_memory_after_query,
                "tool_categories": c.tool_categories,
                "observation_cap": c.observation_cap,
            },
            "memory_messages": st.memory_messages,
            "runs": st.runs.iter().map(|r| r.id.clone()).collect::<Vec<_>>(),
        })
    }

    pub fn run(&self, run_id: &str) -> Result<Arc<RunRecord>, SessionError> {
        let st = self.state.lock().unwrap();
        st.runs.iter().find(|r| r.id == run_id).cloned().ok_or_else(|| SessionError::UnknownRun(run_id.to_string()))
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        match self.status() {
            SessionStatus::Closed => Err(SessionError::Closed(self.id.clone())),
            _ => Ok(()),
        }
    }

    fn touch(&self) {
        self.state.lock().unwrap().last_active = Instant::now();
    }

    /// Starts a query on the session's retained memory. Returns at once.
    pub fn post_query(self: &Arc<Self>, query: String) -> Result<Arc<RunRecord>, SessionError> {
        if query.trim().is_empty() {
            return Err(SessionError::Invalid("query must not be empty".into()));
        }
        let run = {
            let mut st = self.state.lock().unwrap();
            match st.status {
                SessionStatus::Closed => return Err(SessionError::Closed(self.id.clone())),
                SessionStatus::Running => return Err(SessionError::Busy(self.id.clone())),
                SessionStatus::Idle => {}
            }
            st.status = SessionStatus::Running;
            st.last_active = Instant::now();
            self.cancel.store(false, Ordering::SeqCst);
            let run = Arc::new(RunRecord::new(format!("r{}", st.runs.len() + 1), query.clone()));
            st.runs.push(Arc::clone(&run));
            run
        };
        let session = Arc::clone(self);
        let record = Arc::clone(&run);
        tokio::task::spawn_blocking(move || session.execute(&record, &query));
        Ok(run)
    }

    fn execute(&self, run: &RunRecord, query: &str) {
        tracing::info!(session = %self.id, run = %run.id, "query started");
        let redact = Redactor::new(&self.working_dir);
        let mut agent = self.agent.lock().unwrap();
        let result = agent.run_query_with(query, &mut |step| {
            let data = serde_json::to_string(step).expect("step serializes");
            run.push("step", redact.apply(&data), false);
        });
        let summary = match result {
            Ok(r) => r,
            Err(e) => AgentRun {
                query: query.to_string(),
                steps: Vec::new(),
                final_answer: None,
                working_dir: self.working_dir.clone(),
                terminated_by: Termination::FatalError,
                total_duration: 0.0,
                cancelled: false,
                time_budget_exceeded: false,
                fatal_error: Some(e.to_string()),
            },
        };
        let memory = agent.memory().len();
        drop(agent);
        let data = redact.apply(&serde_json::to_string(&summary).expect("run serializes"));
        let archive = {
            let mut st = self.state.lock().unwrap();
            st.memory_messages = memory;
            st.last_active = Instant::now();
            if st.status == SessionStatus::Running {
                st.status = SessionStatus::Idle;
                false
            } else {
                true
            }
        };
        run.push("summary", data, true);
        if archive {
            self.archive();
        }
        tracing::info!(session = %self.id, run = %run.id, steps = summary.steps.len(), "query finished");
    }

    /// Requests cancellation of the running query before its next step.
    pub fn stop(&self) -> Result<bool, SessionError> {
        let st = self.state.lock().unwrap();
        match st.status {
            SessionStatus::Closed => Err(SessionError::Closed(self.id.clone())),
            SessionStatus::Idle => Ok(false),
            SessionStatus::Running => {
                self.cancel.store(true, Ordering::SeqCst);
                Ok(true)
            }
        }
    }

    /// Closes the session; the working directory moves to the archive once no query runs.
    pub fn close(&self) {
        let running = {
            let mut st = self.state.lock().unwrap();
            if st.status == SessionStatus::Closed {
                return;
            }
            let running = st.status == SessionStatus::Running;
            st.status = SessionStatus::Closed;
            running
        };
        if running {
            self.cancel.store(true, Ordering::SeqCst);
        } else {
            self.archive();
        }
    }

    fn archive(&self) {
        let dest = self.archive_dir.join(&self.id);
        let moved = fs::create_dir_all(&self.archive_dir).and_then(|_| fs::rename(&self.working_dir, &dest));
        match moved {
            Ok(()) => self.state.lock().unwrap().archived_to = Some(dest),
            Err(e) => tracing::warn!(session = %self.id, error = %e, "could not archive working directory"),
        }
    }

    pub fn archived_to(&self) -> Option<PathBuf> {
        self.state.lock().unwrap().archived_to.clone()
    }

    /// Files under the working directory, sorted by relative path.
    pub fn list_artifacts(&self) -> Result<Vec<Artifact>, SessionError> {
        self.ensure_open()?;
        self.touch();
        let mut out = Vec::new();
        let mut stack = vec![self.working_dir.clone()];
        while let Some(dir) = stack.pop() {
            let entries = fs::read_dir(&dir).map_err(|e| SessionError::Internal(e.to_string()))?;
            for entry in entries.flatten() {
                let path = entry.path();
                let Ok(meta) = entry.metadata() else { continue };
                if meta.is_dir() {
                    stack.push(path);
                } else if meta.is_file() {
                    let rel = path.strip_prefix(&self.working_dir).expect("listed under working dir");
                    let modified = meta.modified().ok().and_then(|t| t.duration_since(UNIX_EPOCH).ok()).map_or(0, |d| d.as_secs());
                    out.push(Artifact {
                        path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
                        size: meta.len(),
                        modified,
                    });
                }
            }
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }

    /// Bytes of one file inside the working directory.
    pub fn read_artifact(&self, rel: &str) -> Result<Vec<u8>, SessionError> {
        self.ensure_open()?;
        self.touch();
        let path = resolve_inside(&self.working_dir, rel)?;
        if !path.is_file() {
            return Err(SessionError::NotFound(rel.to_string()));
        }
        fs::read(&path).map_err(|e| SessionError::Internal(e.to_string()))
    }
}

/// Joins `rel` onto `root`, refusing anything that would leave `root`.
pub fn resolve_inside(root: &Path, rel: &str) -> Result<PathBuf, SessionError> {
    let escape = || SessionError::PathEscape(rel.to_string());
    let p = Path::new(rel);
    if rel.is_empty() || p.is_absolute() || rel.contains('\\') {
        return Err(escape());
    }
    for c in p.components() {
        if !matches!(c, std::path::Component::Normal(_) | std::path::Component::CurDir) {
            return Err(escape());
        }
    }
    let joined = root.join(p);
    match joined.canonicalize() {
        Ok(real) if real.starts_with(root) => Ok(real),
        Ok(_) => Err(escape()),
        Err(_) => Err(SessionError::NotFound(rel.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub size: u64,
    /// Seconds since the Unix epoch.
    pub modified: u64,
}

struct Redactor {
    needle: String,
}

impl Redactor {
    fn new(dir: &Path) -> Self {
        let s = serde_json::to_string(&dir.to_string_lossy()).expect("string serializes");
        Self { needle: s[1..s.len() - 1].to_string() }
    }

    fn apply(&self, text: &str) -> String {
        text.replace(&self.needle, "{working_dir}")
    }
}

/// All sessions of one service instance.
pub struct SessionStore {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl SessionStore {
    pub fn new(config: ServiceConfig) -> Self {
        Self { config, sessions: Mutex::new(HashMap::new()) }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn create(&self, overrides: &SessionOverrides) -> Result<Arc<Session>, SessionError> {
        let config = overrides.apply(self.config.agent.clone()).map_err(SessionError::Invalid)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let working_dir = self.config.data_dir.join("sessions").join(&id);
        let internal = |e: std::io::Error| SessionError::Internal(e.to_string());
        fs::create_dir_all(&working_dir).map_err(internal)?;
        let working_dir = working_dir.canonicalize().map_err(internal)?;
        let agent = (self.config.adapter)(&working_dir).map_err(SessionError::Internal).and_then(|adapter| {
            Agent::new(config.clone(), adapter, Arc::clone(&self.config.registry), &working_dir)
                .map_err(|e| SessionError::Invalid(e.to_string()))
        });
        let agent = match agent {
            Ok(a) => a,
            Err(e) => {
                let _ = fs::remove_dir_all(&working_dir);
                return Err(e);
            }
        };
        let cancel = agent.cancel_handle();
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let session = Arc::new(Session {
            id: id.clone(),
            created_at,
            config,
            working_dir,
            archive_dir: self.config.data_dir.join("archive"),
            agent: Arc::new(Mutex::new(agent)),
            cancel,
            state: Mutex::new(SessionState {
                status: SessionStatus::Idle,
                runs: Vec::new(),
                last_active: Instant::now(),
                memory_messages: 0,
                archived_to: None,
            }),
        });
        self.sessions.lock().unwrap().insert(id.clone(), Arc::clone(&session));
        tracing::info!(session = %id, "session created");
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, SessionError> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| SessionError::Unknown(id.to_string()))
    }

    /// Closes idle sessions whose last activity is older than the TTL.
    /// Returns the ids closed.
    pub fn sweep_idle(&self) -> Vec<String> {
        let sessions: Vec<Arc<Session>> = self.sessions.lock().unwrap().values().cloned().collect();
        let mut closed = Vec::new();
        for s in sessions {
            let expired = {
                let st = s.state.lock().unwrap();
                st.status == SessionStatus::Idle && st.last_active.elapsed() >= self.config.idle_ttl
            };
            if expired {
                s.close();
                closed.push(s.id.clone());
            }
        }
        closed.sort();
        closed
    }
}
